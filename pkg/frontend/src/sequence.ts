/**
 * Monotonic render gate. Every outgoing query takes a sequence number from
 * issue(); a response may render only if accept() says its number exceeds the
 * last rendered one. Out-of-order arrivals are dropped, never rendered.
 */
export class SequenceGate {
    private nextSeq = 1;
    private lastRendered = 0;

    issue(): number {
        return this.nextSeq++;
    }

    accept(seq: number): boolean {
        if (seq <= this.lastRendered) return false;
        this.lastRendered = seq;
        return true;
    }
}
