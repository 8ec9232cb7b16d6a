/* tslint:disable */
/* eslint-disable */

export class Neckpinch {
    free(): void;
    [Symbol.dispose](): void;
    densityTrace(event: number, dz: number): string;
    events(): string;
    frameCount(): number;
    frame(i: number): string;
    constructor(neck: number, bulb: number, offset: number, samples: number);
}

export function figure1Profile(count: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_neckpinch_free: (a: number, b: number) => void;
    readonly figure1Profile: (a: number) => [number, number, number, number];
    readonly neckpinch_densityTrace: (a: number, b: number, c: number) => [number, number, number, number];
    readonly neckpinch_events: (a: number) => [number, number];
    readonly neckpinch_frame: (a: number, b: number) => [number, number];
    readonly neckpinch_frameCount: (a: number) => number;
    readonly neckpinch_new: (a: number, b: number, c: number, d: number) => [number, number, number];
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
