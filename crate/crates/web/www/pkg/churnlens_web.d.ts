/* tslint:disable */
/* eslint-disable */

/**
 * A network trained in the page on synthetic faces, one epoch per call.
 */
export class DemoClassifier {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Probability that the face [`FacePreview`] shows for the same arguments
     * is female.
     */
    female_probability(female: boolean, noise: number, decoy: boolean, seed: number): number;
    /**
     * Builds a balanced set of `size` synthetic faces (rounded down to even).
     */
    constructor(size: number, noise: number, seed: number);
    /**
     * Runs one epoch and returns `[loss, train_accuracy]`.
     */
    train_epoch(): Float64Array;
    readonly epochs_done: number;
}

/**
 * A synthetic profile picture, the box the pipeline would crop, and the
 * resulting 28×28 network input.
 */
export class FacePreview {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Smaller competing box, empty when there is none.
     */
    decoy_box(): Uint32Array;
    /**
     * Selected (largest) face box as `[x, y, w, h]`.
     */
    face_box(): Uint32Array;
    constructor(female: boolean, noise: number, decoy: boolean, seed: number);
    /**
     * Source image as RGBA bytes, row-major.
     */
    source_rgba(): Uint8Array;
    /**
     * The 28×28 crop/resize output as RGBA bytes.
     */
    tensor_rgba(): Uint8Array;
    readonly height: number;
    readonly tensor_side: number;
    readonly width: number;
}

export class ScoreTest {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    p1: number;
    p2: number;
    p_two_sided: number;
    pooled_p: number;
    z: number;
}

/**
 * Score test of `x1/n1` against `x2/n2`. Errors on impossible counts or a
 * pooled proportion of exactly 0 or 1.
 */
export function score_test_counts(x1: number, n1: number, x2: number, n2: number): ScoreTest;

/**
 * Same test from percentages, rounding to the nearest whole count.
 */
export function score_test_percent(pct1: number, n1: number, pct2: number, n2: number): ScoreTest;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_democlassifier_free: (a: number, b: number) => void;
    readonly __wbg_facepreview_free: (a: number, b: number) => void;
    readonly __wbg_get_scoretest_p1: (a: number) => number;
    readonly __wbg_get_scoretest_p2: (a: number) => number;
    readonly __wbg_get_scoretest_p_two_sided: (a: number) => number;
    readonly __wbg_get_scoretest_pooled_p: (a: number) => number;
    readonly __wbg_get_scoretest_z: (a: number) => number;
    readonly __wbg_scoretest_free: (a: number, b: number) => void;
    readonly __wbg_set_scoretest_p1: (a: number, b: number) => void;
    readonly __wbg_set_scoretest_p2: (a: number, b: number) => void;
    readonly __wbg_set_scoretest_p_two_sided: (a: number, b: number) => void;
    readonly __wbg_set_scoretest_pooled_p: (a: number, b: number) => void;
    readonly __wbg_set_scoretest_z: (a: number, b: number) => void;
    readonly democlassifier_epochs_done: (a: number) => number;
    readonly democlassifier_female_probability: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly democlassifier_new: (a: number, b: number, c: number) => [number, number, number];
    readonly democlassifier_train_epoch: (a: number) => [number, number, number, number];
    readonly facepreview_decoy_box: (a: number) => [number, number];
    readonly facepreview_face_box: (a: number) => [number, number];
    readonly facepreview_height: (a: number) => number;
    readonly facepreview_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly facepreview_source_rgba: (a: number) => [number, number];
    readonly facepreview_tensor_rgba: (a: number) => [number, number];
    readonly facepreview_tensor_side: (a: number) => number;
    readonly facepreview_width: (a: number) => number;
    readonly score_test_counts: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly score_test_percent: (a: number, b: number, c: number, d: number) => [number, number, number];
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
