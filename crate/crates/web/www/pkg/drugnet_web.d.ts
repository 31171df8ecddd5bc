/* tslint:disable */
/* eslint-disable */

/**
 * Index of the largest probability; ties go to the lowest index.
 */
export function argmax(p: Float64Array): number;

export function ensemble(p_word: Float64Array, p_trigram: Float64Array): Float64Array;

/**
 * Per-group rates, head first.
 */
export function group_rates(base: number, n_groups: number, decay: number): Float64Array;

export function normalize(text: string): string;

/**
 * Learning rate at every step `0..=total` of a slanted triangular schedule.
 */
export function stlr_curve(total: number, cut_frac: number, ratio: number, lr_max: number): Float64Array;

/**
 * Space-joined trigram stream of a raw tweet.
 */
export function trigrams(text: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly argmax: (a: number, b: number) => number;
    readonly ensemble: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly group_rates: (a: number, b: number, c: number) => [number, number, number, number];
    readonly normalize: (a: number, b: number) => [number, number];
    readonly stlr_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly trigrams: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
