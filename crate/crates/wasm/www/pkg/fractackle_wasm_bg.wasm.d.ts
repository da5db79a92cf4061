/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const simulate_play: (a: number, b: number) => [number, number, number, number];
export const value_window: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const worked_example: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
