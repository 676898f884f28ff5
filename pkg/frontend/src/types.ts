// Wire types for the /v1 HTTP API. Field names match the JSON exactly.

export type Modality = "text" | "image" | "sketch" | "precomputed";

export interface QueryInput {
    modality: Modality;
    payload?: string;
    embedding?: number[];
    weight: number;
    label?: string;
}

export interface QueryRequest {
    inputs: QueryInput[];
    collection_id: string;
    k: number;
}

export interface Match {
    asset_id: string;
    score: number;
    best_view: string;
    display_name: string;
    category: string;
    thumbnail_path: string;
}

export interface QueryTiming {
    encode_micros: number;
    fuse_micros: number;
    scan_micros: number;
    total_micros: number;
}

export interface QueryResponse {
    matches: Match[];
    fused_provenance: [string, number][];
    timing: QueryTiming;
}

export interface CollectionInfo {
    collection_id: string;
    render_style: string;
    record_count: number;
    asset_count: number;
    dimension: number;
}

export interface AssetDetail {
    asset_id: string;
    category: string;
    display_name: string;
    thumbnail_path: string;
    mesh_path: string;
}

export interface HealthInfo {
    status: string;
    uptime: number;
    encoder_mode: string;
}
