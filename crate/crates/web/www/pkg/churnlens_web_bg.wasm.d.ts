/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_democlassifier_free: (a: number, b: number) => void;
export const __wbg_facepreview_free: (a: number, b: number) => void;
export const __wbg_get_scoretest_p1: (a: number) => number;
export const __wbg_get_scoretest_p2: (a: number) => number;
export const __wbg_get_scoretest_p_two_sided: (a: number) => number;
export const __wbg_get_scoretest_pooled_p: (a: number) => number;
export const __wbg_get_scoretest_z: (a: number) => number;
export const __wbg_scoretest_free: (a: number, b: number) => void;
export const __wbg_set_scoretest_p1: (a: number, b: number) => void;
export const __wbg_set_scoretest_p2: (a: number, b: number) => void;
export const __wbg_set_scoretest_p_two_sided: (a: number, b: number) => void;
export const __wbg_set_scoretest_pooled_p: (a: number, b: number) => void;
export const __wbg_set_scoretest_z: (a: number, b: number) => void;
export const democlassifier_epochs_done: (a: number) => number;
export const democlassifier_female_probability: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const democlassifier_new: (a: number, b: number, c: number) => [number, number, number];
export const democlassifier_train_epoch: (a: number) => [number, number, number, number];
export const facepreview_decoy_box: (a: number) => [number, number];
export const facepreview_face_box: (a: number) => [number, number];
export const facepreview_height: (a: number) => number;
export const facepreview_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const facepreview_source_rgba: (a: number) => [number, number];
export const facepreview_tensor_rgba: (a: number) => [number, number];
export const facepreview_tensor_side: (a: number) => number;
export const facepreview_width: (a: number) => number;
export const score_test_counts: (a: number, b: number, c: number, d: number) => [number, number, number];
export const score_test_percent: (a: number, b: number, c: number, d: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
