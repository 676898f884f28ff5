import { AssetDetail, Match, QueryTiming } from "./types.js";

const ESCAPES: Record<string, string> = {
    "&": "&amp;",
    "<": "&lt;",
    ">": "&gt;",
    '"': "&quot;",
    "'": "&#39;",
};

export function escapeHtml(text: string): string {
    return text.replace(/[&<>"']/g, (ch) => ESCAPES[ch]);
}

/**
 * Render result cards in response order. The server already ranked them;
 * the client never reorders or rescores.
 */
export function renderGallery(matches: Match[]): string {
    if (matches.length === 0) {
        return `<p class="empty">no matches</p>`;
    }
    return matches.map(renderResultCard).join("");
}

function renderResultCard(m: Match): string {
    const name = escapeHtml(m.display_name || m.asset_id);
    const thumb = m.thumbnail_path
        ? `<img class="thumb" src="${escapeHtml(m.thumbnail_path)}" alt="${name}">`
        : `<div class="thumb thumb-missing">${name.slice(0, 2)}</div>`;
    return (
        `<figure class="result" data-asset-id="${escapeHtml(m.asset_id)}">` +
        thumb +
        `<figcaption>` +
        `<span class="name">${name}</span>` +
        `<span class="score">${m.score.toFixed(4)}</span>` +
        `<span class="view">${escapeHtml(m.best_view)}</span>` +
        `</figcaption></figure>`
    );
}

export function renderEmptyCollection(): string {
    return `<p class="empty">this collection has no assets</p>`;
}

export function renderTiming(t: QueryTiming): string {
    const ms = (micros: number) => (micros / 1000).toFixed(1);
    return (
        `encode ${ms(t.encode_micros)} ms / fuse ${ms(t.fuse_micros)} ms / ` +
        `scan ${ms(t.scan_micros)} ms / total ${ms(t.total_micros)} ms`
    );
}

export function renderDetail(asset: AssetDetail): string {
    const name = escapeHtml(asset.display_name || asset.asset_id);
    const thumb = asset.thumbnail_path
        ? `<img class="detail-thumb" src="${escapeHtml(asset.thumbnail_path)}" alt="${name}">`
        : "";
    return (
        `<button class="close-detail">close</button>` +
        thumb +
        `<h2>${name}</h2>` +
        `<dl>` +
        `<dt>asset id</dt><dd>${escapeHtml(asset.asset_id)}</dd>` +
        `<dt>category</dt><dd>${escapeHtml(asset.category) || "(none)"}</dd>` +
        `<dt>mesh</dt><dd>${escapeHtml(asset.mesh_path) || "(none)"}</dd>` +
        `</dl>`
    );
}
