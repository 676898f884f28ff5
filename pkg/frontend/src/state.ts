import { QueryResponse } from "./types.js";

export const WEIGHT_MIN = -2;
export const WEIGHT_MAX = 2;
export const WEIGHT_STEP = 0.05;
export const DEFAULT_K = 5;
export const MAX_K = 100;

export type CardModality = "text" | "image" | "sketch";

export interface InputCard {
    id: number;
    label: string;
    modality: CardModality;
    /** Text content for text cards, base64 file bytes for image/sketch cards. */
    payload: string;
    /** Original name of the uploaded file, "" for text cards. */
    fileName: string;
    weight: number;
    enabled: boolean;
}

export interface SessionState {
    collectionId: string;
    k: number;
    cards: InputCard[];
    lastResponse: QueryResponse | null;
    nextCardId: number;
}

export function initialState(): SessionState {
    return {
        collectionId: "",
        k: DEFAULT_K,
        cards: [],
        lastResponse: null,
        nextCardId: 1,
    };
}

export function addCard(state: SessionState, modality: CardModality): InputCard {
    const id = state.nextCardId++;
    const card: InputCard = {
        id,
        label: `${modality} ${id}`,
        modality,
        payload: "",
        fileName: "",
        weight: 1,
        enabled: true,
    };
    state.cards.push(card);
    return card;
}

export function removeCard(state: SessionState, id: number): void {
    state.cards = state.cards.filter((c) => c.id !== id);
}

/** Clamp to [-2, +2] and snap to the 0.05 slider step. */
export function clampWeight(value: number): number {
    if (!Number.isFinite(value)) return 0;
    const clamped = Math.min(WEIGHT_MAX, Math.max(WEIGHT_MIN, value));
    return Math.round(clamped * 20) / 20;
}
