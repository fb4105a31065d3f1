/* tslint:disable */
/* eslint-disable */

/**
 * Butterfly points `[α₀, E₀, α₁, E₁, …]` over the Farey fractions with `q ≤ qmax`.
 */
export function butterfly(w0: number, w1: number, theta: number, qmax: number, bloch_points: number): Float64Array;

/**
 * The eight Lyapunov exponents at energy `energy`, followed by their largest standard error.
 */
export function lyapunov(w0: number, w1: number, alpha: number, energy: number, iterates: number): Float64Array;

/**
 * `[Re tr M, Im tr M, |det M − 1|, 1 if zero energy is excluded at k_x = 0]`
 * for the chiral monodromy at coupling `w1`.
 */
export function monodromy(w1: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly butterfly: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly lyapunov: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly monodromy: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
