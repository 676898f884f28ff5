import { ApiClient, ApiError, isWeightsCancel } from "./api.js";
import { composeQuery } from "./compose.js";
import { DEBOUNCE_MS, debounce } from "./debounce.js";
import {
    escapeHtml,
    renderDetail,
    renderEmptyCollection,
    renderGallery,
    renderTiming,
} from "./gallery.js";
import { SequenceGate } from "./sequence.js";
import {
    CardModality,
    DEFAULT_K,
    InputCard,
    MAX_K,
    SessionState,
    WEIGHT_MAX,
    WEIGHT_MIN,
    WEIGHT_STEP,
    addCard,
    clampWeight,
    initialState,
    removeCard,
} from "./state.js";
import { CollectionInfo } from "./types.js";

export interface App {
    state: SessionState;
    requery: () => void;
    root: HTMLElement;
}

const SKELETON = `
<header class="topbar">
    <h1>meshsearch</h1>
    <label>collection <select id="collection"></select></label>
    <label>k <input id="k" type="number" min="1" max="${MAX_K}" value="${DEFAULT_K}"></label>
    <span id="health" class="health"></span>
</header>
<div class="layout">
    <aside class="cards-pane">
        <div class="add-row">
            <button id="add-text" type="button">+ text</button>
            <button id="add-image" type="button">+ image</button>
            <button id="add-sketch" type="button">+ sketch</button>
        </div>
        <div id="cards"></div>
    </aside>
    <main class="results-pane">
        <div id="hint" class="hint" hidden></div>
        <div id="banner" class="banner" hidden>
            <span id="banner-text"></span>
            <button id="retry" type="button">retry</button>
        </div>
        <div id="gallery" class="gallery"></div>
        <footer id="timing" class="timing"></footer>
    </main>
    <aside id="detail" class="detail-pane" hidden></aside>
</div>`;

export function initApp(root: HTMLElement, api: ApiClient): App {
    const state = initialState();
    const gate = new SequenceGate();
    let collections: CollectionInfo[] = [];

    root.innerHTML = SKELETON;
    const pick = <T extends HTMLElement>(sel: string): T => {
        const el = root.querySelector<T>(sel);
        if (!el) throw new Error(`missing element ${sel}`);
        return el;
    };
    const collectionSel = pick<HTMLSelectElement>("#collection");
    const kInput = pick<HTMLInputElement>("#k");
    const cardsEl = pick<HTMLElement>("#cards");
    const galleryEl = pick<HTMLElement>("#gallery");
    const hintEl = pick<HTMLElement>("#hint");
    const bannerEl = pick<HTMLElement>("#banner");
    const bannerText = pick<HTMLElement>("#banner-text");
    const timingEl = pick<HTMLElement>("#timing");
    const detailEl = pick<HTMLElement>("#detail");
    const healthEl = pick<HTMLElement>("#health");

    function setHint(text: string | null): void {
        hintEl.hidden = text === null;
        hintEl.textContent = text ?? "";
    }

    function setBanner(text: string | null): void {
        bannerEl.hidden = text === null;
        bannerText.textContent = text ?? "";
    }

    function requery(): void {
        const col = collections.find((c) => c.collection_id === state.collectionId);
        if (col && col.asset_count === 0) {
            galleryEl.innerHTML = renderEmptyCollection();
            timingEl.textContent = "";
            return;
        }
        const request = composeQuery(state);
        if (request === null) {
            setHint(
                state.cards.some((c) => c.enabled)
                    ? "add some content to an enabled input"
                    : "enable at least one input",
            );
            return;
        }
        const seq = gate.issue();
        api.query(request)
            .then((resp) => {
                if (!gate.accept(seq)) return; // superseded by a newer render
                state.lastResponse = resp;
                setHint(null);
                setBanner(null);
                galleryEl.innerHTML = renderGallery(resp.matches);
                timingEl.textContent = renderTiming(resp.timing);
            })
            .catch((err: unknown) => {
                if (!gate.accept(seq)) return;
                if (isWeightsCancel(err)) {
                    // inline hint; the previous gallery stays up
                    setHint("weights cancel: adjust weights");
                    return;
                }
                if (err instanceof ApiError && err.status > 0) {
                    setHint(typeof err.detail === "string" ? err.detail : "request rejected");
                    return;
                }
                setBanner("query failed, check the server connection");
            });
    }

    const debouncedRequery = debounce(requery, DEBOUNCE_MS);

    function cardHtml(card: InputCard): string {
        const payloadField =
            card.modality === "text"
                ? `<textarea class="payload" rows="2" placeholder="describe the target">${escapeHtml(card.payload)}</textarea>`
                : `<label class="file-label">${card.fileName ? escapeHtml(card.fileName) : "choose a file"}
                       <input class="file" type="file" accept="image/*">
                   </label>`;
        return `
<section class="card" data-card-id="${card.id}">
    <div class="card-head">
        <input class="label" value="${escapeHtml(card.label)}" title="label">
        <span class="modality">${card.modality}</span>
        <input class="enabled" type="checkbox" ${card.enabled ? "checked" : ""} title="enabled">
        <button class="remove" type="button" title="remove">x</button>
    </div>
    ${payloadField}
    <div class="weight-row">
        <input class="weight" type="range" min="${WEIGHT_MIN}" max="${WEIGHT_MAX}"
               step="${WEIGHT_STEP}" value="${card.weight}">
        <output class="weight-out">${card.weight.toFixed(2)}</output>
    </div>
</section>`;
    }

    function renderCards(): void {
        cardsEl.innerHTML = state.cards.map(cardHtml).join("");
    }

    function cardOf(target: EventTarget | null): InputCard | null {
        const el = target instanceof HTMLElement ? target.closest("[data-card-id]") : null;
        if (!el) return null;
        const id = Number(el.getAttribute("data-card-id"));
        return state.cards.find((c) => c.id === id) ?? null;
    }

    cardsEl.addEventListener("input", (ev) => {
        const target = ev.target as HTMLElement;
        const card = cardOf(target);
        if (!card) return;
        if (target.classList.contains("weight")) {
            card.weight = clampWeight(Number((target as HTMLInputElement).value));
            const out = target.parentElement?.querySelector(".weight-out");
            if (out) out.textContent = card.weight.toFixed(2);
            debouncedRequery();
        } else if (target.classList.contains("payload")) {
            card.payload = (target as HTMLTextAreaElement).value;
            debouncedRequery();
        } else if (target.classList.contains("label")) {
            card.label = (target as HTMLInputElement).value;
        }
    });

    cardsEl.addEventListener("change", (ev) => {
        const target = ev.target as HTMLElement;
        const card = cardOf(target);
        if (!card) return;
        if (target.classList.contains("weight")) {
            // slider release: don't sit out the debounce delay
            card.weight = clampWeight(Number((target as HTMLInputElement).value));
            debouncedRequery();
            debouncedRequery.flush();
        } else if (target.classList.contains("enabled")) {
            card.enabled = (target as HTMLInputElement).checked;
            requery();
        } else if (target.classList.contains("file")) {
            const input = target as HTMLInputElement;
            const file = input.files && input.files[0];
            if (!file) return;
            readFileBase64(file).then((b64) => {
                card.payload = b64;
                card.fileName = file.name;
                renderCards();
                requery();
            });
        }
    });

    cardsEl.addEventListener("click", (ev) => {
        const target = ev.target as HTMLElement;
        if (!target.classList.contains("remove")) return;
        const card = cardOf(target);
        if (!card) return;
        removeCard(state, card.id);
        renderCards();
        requery();
    });

    galleryEl.addEventListener("click", (ev) => {
        const fig = (ev.target as HTMLElement).closest("[data-asset-id]");
        if (!fig) return;
        const assetId = fig.getAttribute("data-asset-id") ?? "";
        api.asset(assetId)
            .then((asset) => {
                detailEl.innerHTML = renderDetail(asset);
                detailEl.hidden = false;
            })
            .catch(() => setBanner("could not load asset detail"));
    });

    detailEl.addEventListener("click", (ev) => {
        if ((ev.target as HTMLElement).classList.contains("close-detail")) {
            detailEl.hidden = true;
        }
    });

    collectionSel.addEventListener("change", () => {
        state.collectionId = collectionSel.value;
        requery();
    });

    kInput.addEventListener("change", () => {
        const k = Math.max(1, Math.min(MAX_K, Math.round(Number(kInput.value) || DEFAULT_K)));
        kInput.value = String(k);
        state.k = k;
        requery();
    });

    const addAndRender = (modality: CardModality) => {
        addCard(state, modality);
        renderCards();
    };
    pick<HTMLButtonElement>("#add-text").addEventListener("click", () => addAndRender("text"));
    pick<HTMLButtonElement>("#add-image").addEventListener("click", () => addAndRender("image"));
    pick<HTMLButtonElement>("#add-sketch").addEventListener("click", () => addAndRender("sketch"));
    pick<HTMLButtonElement>("#retry").addEventListener("click", () => {
        setBanner(null);
        requery();
    });

    api.health()
        .then((h) => {
            healthEl.textContent = `${h.status} (${h.encoder_mode})`;
        })
        .catch(() => {
            healthEl.textContent = "unreachable";
        });

    api.collections()
        .then((cols) => {
            collections = cols;
            collectionSel.innerHTML = cols
                .map(
                    (c) =>
                        `<option value="${escapeHtml(c.collection_id)}">` +
                        `${escapeHtml(c.collection_id)} (${c.asset_count})</option>`,
                )
                .join("");
            if (cols.length > 0) {
                state.collectionId = cols[0].collection_id;
            } else {
                setHint("no collections imported yet");
            }
            if (state.cards.length === 0) addAndRender("text");
            requery();
        })
        .catch(() => setBanner("could not load collections"));

    return { state, requery, root };
}

function readFileBase64(file: File): Promise<string> {
    return new Promise((resolve, reject) => {
        const reader = new FileReader();
        reader.onerror = () => reject(reader.error);
        reader.onload = () => {
            const url = String(reader.result);
            resolve(url.slice(url.indexOf(",") + 1));
        };
        reader.readAsDataURL(file);
    });
}
