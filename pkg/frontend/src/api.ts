import {
    AssetDetail,
    CollectionInfo,
    HealthInfo,
    QueryRequest,
    QueryResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    constructor(readonly status: number, readonly detail: unknown) {
        super(typeof detail === "string" ? detail : `request failed with status ${status}`);
        this.name = "ApiError";
    }
}

/** True for the 400 the server sends when query weights sum to the zero vector. */
export function isWeightsCancel(err: unknown): boolean {
    return (
        err instanceof ApiError &&
        err.status === 400 &&
        typeof err.detail === "string" &&
        err.detail.startsWith("weights cancel")
    );
}

export class ApiClient {
    constructor(
        private readonly baseUrl: string = "",
        private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let resp: Response;
        try {
            resp = await this.fetchFn(this.baseUrl + path, init);
        } catch (err) {
            // status 0 marks transport failures so the UI can offer a retry
            throw new ApiError(0, `network failure: ${String(err)}`);
        }
        const body: unknown = await resp.json().catch(() => null);
        if (!resp.ok) {
            const detail =
                body !== null && typeof body === "object" && "detail" in body
                    ? (body as { detail: unknown }).detail
                    : `status ${resp.status}`;
            throw new ApiError(resp.status, detail);
        }
        return body as T;
    }

    health(): Promise<HealthInfo> {
        return this.request("/v1/health");
    }

    collections(): Promise<CollectionInfo[]> {
        return this.request("/v1/collections");
    }

    asset(assetId: string): Promise<AssetDetail> {
        return this.request(`/v1/assets/${encodeURIComponent(assetId)}`);
    }

    query(req: QueryRequest): Promise<QueryResponse> {
        return this.request("/v1/query", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(req),
        });
    }
}
