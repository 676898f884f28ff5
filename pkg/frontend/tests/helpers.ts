import { vi } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";
import { initApp, App } from "../src/app.js";
import {
    CollectionInfo,
    Match,
    QueryRequest,
    QueryResponse,
} from "../src/types.js";

export const FIXTURE_COLLECTIONS: CollectionInfo[] = [
    {
        collection_id: "fixture",
        render_style: "textured",
        record_count: 30,
        asset_count: 10,
        dimension: 32,
    },
    {
        collection_id: "bare",
        render_style: "untextured",
        record_count: 0,
        asset_count: 0,
        dimension: 32,
    },
];

export function matchesOf(...ids: string[]): Match[] {
    return ids.map((id, i) => ({
        asset_id: id,
        score: 0.95 - i * 0.07,
        best_view: "front",
        display_name: id,
        category: "chair",
        thumbnail_path: "",
    }));
}

export function queryResponse(ids: string[]): QueryResponse {
    return {
        matches: matchesOf(...ids),
        fused_provenance: [["input-0", 1]],
        timing: { encode_micros: 40, fuse_micros: 5, scan_micros: 900, total_micros: 1100 },
    };
}

export function json(status: number, payload: unknown): Response {
    return new Response(JSON.stringify(payload), {
        status,
        headers: { "content-type": "application/json" },
    });
}

export interface RecordedCall {
    path: string;
    at: number;
    req: QueryRequest | null;
}

export interface Harness {
    app: App;
    root: HTMLElement;
    calls: RecordedCall[];
    queryCalls(): RecordedCall[];
    gallery(): HTMLElement;
    galleryIds(): string[];
    hint(): HTMLElement;
    banner(): HTMLElement;
    slider(): HTMLInputElement;
    textarea(): HTMLTextAreaElement;
}

/** Let queued microtasks (promise chains from resolved fetches) run out. */
export async function flush(): Promise<void> {
    for (let i = 0; i < 12; i++) await Promise.resolve();
}

/**
 * Mount the app against a stubbed server. `onQuery` decides each /v1/query
 * response; everything else is served from fixtures.
 */
export async function mountApp(
    onQuery: (req: QueryRequest, nth: number) => Promise<Response>,
    collections: CollectionInfo[] = FIXTURE_COLLECTIONS,
): Promise<Harness> {
    const calls: RecordedCall[] = [];
    let nth = 0;
    const fetchStub: FetchLike = (input, init) => {
        const req = init?.body ? (JSON.parse(init.body as string) as QueryRequest) : null;
        calls.push({ path: input, at: Date.now(), req });
        if (input.endsWith("/v1/health")) {
            return Promise.resolve(json(200, { status: "ok", uptime: 3.2, encoder_mode: "mock" }));
        }
        if (input.endsWith("/v1/collections")) {
            return Promise.resolve(json(200, collections));
        }
        if (input.includes("/v1/assets/")) {
            const id = decodeURIComponent(input.split("/v1/assets/")[1]);
            return Promise.resolve(
                json(200, {
                    asset_id: id,
                    category: "chair",
                    display_name: `The ${id}`,
                    thumbnail_path: "",
                    mesh_path: `/meshes/${id}.glb`,
                }),
            );
        }
        if (input.endsWith("/v1/query")) {
            return onQuery(req as QueryRequest, ++nth);
        }
        return Promise.resolve(json(404, { detail: "no route" }));
    };

    document.body.innerHTML = `<div id="app"></div>`;
    const root = document.getElementById("app") as HTMLElement;
    const app = initApp(root, new ApiClient("", fetchStub));
    await flush();

    const pick = <T extends HTMLElement>(sel: string): T => {
        const el = root.querySelector<T>(sel);
        if (!el) throw new Error(`missing ${sel}`);
        return el;
    };
    return {
        app,
        root,
        calls,
        queryCalls: () => calls.filter((c) => c.path.endsWith("/v1/query")),
        gallery: () => pick("#gallery"),
        galleryIds: () =>
            Array.from(root.querySelectorAll("#gallery [data-asset-id]")).map(
                (el) => el.getAttribute("data-asset-id") ?? "",
            ),
        hint: () => pick("#hint"),
        banner: () => pick("#banner"),
        slider: () => pick<HTMLInputElement>("input.weight"),
        textarea: () => pick<HTMLTextAreaElement>("textarea.payload"),
    };
}

/** Type into the first text card and settle the debounced query. */
export async function typeAndSettle(h: Harness, text: string): Promise<void> {
    const area = h.textarea();
    area.value = text;
    area.dispatchEvent(new Event("input", { bubbles: true }));
    await vi.advanceTimersByTimeAsync(100);
    await flush();
}

export function dragTick(h: Harness, value: number): void {
    const slider = h.slider();
    slider.value = String(value);
    slider.dispatchEvent(new Event("input", { bubbles: true }));
}

export function releaseSlider(h: Harness): void {
    h.slider().dispatchEvent(new Event("change", { bubbles: true }));
}
