import { SessionState } from "./state.js";
import { QueryInput, QueryRequest } from "./types.js";

/**
 * Map the session to a query request, or null when nothing can be submitted
 * (no collection, or no enabled card with content). Disabled cards and empty
 * drafts are excluded. Payload strings are passed through untouched so a
 * re-query with only weight changes sends byte-identical payloads and the
 * server's encode cache absorbs them.
 */
export function composeQuery(state: SessionState): QueryRequest | null {
    if (!state.collectionId) return null;
    const inputs: QueryInput[] = [];
    for (const card of state.cards) {
        if (!card.enabled || card.payload === "") continue;
        inputs.push({
            modality: card.modality,
            payload: card.payload,
            weight: card.weight,
            label: card.label,
        });
    }
    if (inputs.length === 0) return null;
    return { inputs, collection_id: state.collectionId, k: state.k };
}
