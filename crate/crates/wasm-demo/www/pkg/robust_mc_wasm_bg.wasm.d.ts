/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_completiondemo_free: (a: number, b: number) => void;
export const complete: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number) => [number, number, number];
export const completiondemo_huber_errors: (a: number) => [number, number];
export const completiondemo_least_squares_errors: (a: number) => [number, number];
export const completiondemo_observed: (a: number) => number;
export const completiondemo_tau: (a: number) => number;
export const huber_curves: (a: number, b: number, c: number) => [number, number, number, number];
export const noise_histogram: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
