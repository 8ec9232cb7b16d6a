/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_neckpinch_free: (a: number, b: number) => void;
export const figure1Profile: (a: number) => [number, number, number, number];
export const neckpinch_densityTrace: (a: number, b: number, c: number) => [number, number, number, number];
export const neckpinch_events: (a: number) => [number, number];
export const neckpinch_frame: (a: number, b: number) => [number, number];
export const neckpinch_frameCount: (a: number) => number;
export const neckpinch_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
