export const DEBOUNCE_MS = 75;

export interface Debounced<A extends unknown[]> {
    (...args: A): void;
    /** Run the pending call now instead of waiting out the delay. */
    flush(): void;
    cancel(): void;
    pending(): boolean;
}

/**
 * Trailing-edge debounce: the wrapped function runs once, `wait` ms after the
 * last call, with the last call's arguments.
 */
export function debounce<A extends unknown[]>(
    fn: (...args: A) => void,
    wait: number = DEBOUNCE_MS,
): Debounced<A> {
    let timer: ReturnType<typeof setTimeout> | undefined;
    let lastArgs: A | undefined;

    const debounced = (...args: A): void => {
        lastArgs = args;
        clearTimeout(timer);
        timer = setTimeout(() => {
            timer = undefined;
            fn(...(lastArgs as A));
        }, wait);
    };

    debounced.flush = (): void => {
        if (timer === undefined) return;
        clearTimeout(timer);
        timer = undefined;
        fn(...(lastArgs as A));
    };

    debounced.cancel = (): void => {
        clearTimeout(timer);
        timer = undefined;
    };

    debounced.pending = (): boolean => timer !== undefined;

    return debounced;
}
