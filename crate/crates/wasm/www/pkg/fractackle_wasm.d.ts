/* tslint:disable */
/* eslint-disable */

/**
 * Random run play from `seed`, evaluated at contact distance `threshold`.
 * Returns JSON.
 */
export function simulate_play(seed: number, threshold: number): string;

/**
 * Values a single window from its landmarks. `v_post` may be `-Infinity`
 * when the window ends the play. Returns `{"w": .., "case": ..}`.
 */
export function value_window(v_start: number, v_end: number, v_pre: number, v_post: number, peak_inside: boolean): string;

/**
 * The three-window worked example evaluated at `threshold`. Returns JSON.
 */
export function worked_example(threshold: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly simulate_play: (a: number, b: number) => [number, number, number, number];
    readonly value_window: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly worked_example: (a: number) => [number, number, number, number];
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
