/* tslint:disable */
/* eslint-disable */

/**
 * Error trajectories of one Huber run and one least-squares run on the
 * same synthetic instance.
 */
export class CompletionDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Relative error `‖XYᵀ − M⋆‖_F / ‖M⋆‖_F` per iteration, Huber loss.
     */
    huber_errors(): Float64Array;
    /**
     * The same for `τ = ∞`.
     */
    least_squares_errors(): Float64Array;
    observed(): number;
    tau(): number;
}

export function complete(n: number, r: number, p: number, kind: string, sigma: number, param: number, tau: number | null | undefined, iters: number, seed: number): CompletionDemo;

export function huber_curves(tau: number, x_max: number, points: number): Float64Array;

export function noise_histogram(kind: string, sigma: number, param: number, draws: number, bins: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_completiondemo_free: (a: number, b: number) => void;
    readonly complete: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number) => [number, number, number];
    readonly completiondemo_huber_errors: (a: number) => [number, number];
    readonly completiondemo_least_squares_errors: (a: number) => [number, number];
    readonly completiondemo_observed: (a: number) => number;
    readonly completiondemo_tau: (a: number) => number;
    readonly huber_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly noise_histogram: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
