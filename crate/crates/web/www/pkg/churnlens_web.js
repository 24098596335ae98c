/* @ts-self-types="./churnlens_web.d.ts" */

/**
 * A network trained in the page on synthetic faces, one epoch per call.
 */
export class DemoClassifier {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        DemoClassifierFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_democlassifier_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get epochs_done() {
        const ret = wasm.democlassifier_epochs_done(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Probability that the face [`FacePreview`] shows for the same arguments
     * is female.
     * @param {boolean} female
     * @param {number} noise
     * @param {boolean} decoy
     * @param {number} seed
     * @returns {number}
     */
    female_probability(female, noise, decoy, seed) {
        const ret = wasm.democlassifier_female_probability(this.__wbg_ptr, female, noise, decoy, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return ret[0];
    }
    /**
     * Builds a balanced set of `size` synthetic faces (rounded down to even).
     * @param {number} size
     * @param {number} noise
     * @param {number} seed
     */
    constructor(size, noise, seed) {
        const ret = wasm.democlassifier_new(size, noise, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        DemoClassifierFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * Runs one epoch and returns `[loss, train_accuracy]`.
     * @returns {Float64Array}
     */
    train_epoch() {
        const ret = wasm.democlassifier_train_epoch(this.__wbg_ptr);
        if (ret[3]) {
            throw takeFromExternrefTable0(ret[2]);
        }
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) DemoClassifier.prototype[Symbol.dispose] = DemoClassifier.prototype.free;

/**
 * A synthetic profile picture, the box the pipeline would crop, and the
 * resulting 28×28 network input.
 */
export class FacePreview {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        FacePreviewFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_facepreview_free(ptr, 0);
    }
    /**
     * Smaller competing box, empty when there is none.
     * @returns {Uint32Array}
     */
    decoy_box() {
        const ret = wasm.facepreview_decoy_box(this.__wbg_ptr);
        var v1 = getArrayU32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * Selected (largest) face box as `[x, y, w, h]`.
     * @returns {Uint32Array}
     */
    face_box() {
        const ret = wasm.facepreview_face_box(this.__wbg_ptr);
        var v1 = getArrayU32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get height() {
        const ret = wasm.facepreview_height(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {boolean} female
     * @param {number} noise
     * @param {boolean} decoy
     * @param {number} seed
     */
    constructor(female, noise, decoy, seed) {
        const ret = wasm.facepreview_new(female, noise, decoy, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        FacePreviewFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * Source image as RGBA bytes, row-major.
     * @returns {Uint8Array}
     */
    source_rgba() {
        const ret = wasm.facepreview_source_rgba(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * The 28×28 crop/resize output as RGBA bytes.
     * @returns {Uint8Array}
     */
    tensor_rgba() {
        const ret = wasm.facepreview_tensor_rgba(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {number}
     */
    get tensor_side() {
        const ret = wasm.facepreview_tensor_side(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get width() {
        const ret = wasm.facepreview_width(this.__wbg_ptr);
        return ret >>> 0;
    }
}
if (Symbol.dispose) FacePreview.prototype[Symbol.dispose] = FacePreview.prototype.free;

export class ScoreTest {
    static __wrap(ptr) {
        const obj = Object.create(ScoreTest.prototype);
        obj.__wbg_ptr = ptr;
        ScoreTestFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ScoreTestFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_scoretest_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get p1() {
        const ret = wasm.__wbg_get_scoretest_p1(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get p2() {
        const ret = wasm.__wbg_get_scoretest_p2(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get p_two_sided() {
        const ret = wasm.__wbg_get_scoretest_p_two_sided(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get pooled_p() {
        const ret = wasm.__wbg_get_scoretest_pooled_p(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get z() {
        const ret = wasm.__wbg_get_scoretest_z(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set p1(arg0) {
        wasm.__wbg_set_scoretest_p1(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set p2(arg0) {
        wasm.__wbg_set_scoretest_p2(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set p_two_sided(arg0) {
        wasm.__wbg_set_scoretest_p_two_sided(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set pooled_p(arg0) {
        wasm.__wbg_set_scoretest_pooled_p(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set z(arg0) {
        wasm.__wbg_set_scoretest_z(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) ScoreTest.prototype[Symbol.dispose] = ScoreTest.prototype.free;

/**
 * Score test of `x1/n1` against `x2/n2`. Errors on impossible counts or a
 * pooled proportion of exactly 0 or 1.
 * @param {number} x1
 * @param {number} n1
 * @param {number} x2
 * @param {number} n2
 * @returns {ScoreTest}
 */
export function score_test_counts(x1, n1, x2, n2) {
    const ret = wasm.score_test_counts(x1, n1, x2, n2);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return ScoreTest.__wrap(ret[0]);
}

/**
 * Same test from percentages, rounding to the nearest whole count.
 * @param {number} pct1
 * @param {number} n1
 * @param {number} pct2
 * @param {number} n2
 * @returns {ScoreTest}
 */
export function score_test_percent(pct1, n1, pct2, n2) {
    const ret = wasm.score_test_percent(pct1, n1, pct2, n2);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return ScoreTest.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./churnlens_web_bg.js": import0,
    };
}

const DemoClassifierFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_democlassifier_free(ptr, 1));
const FacePreviewFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_facepreview_free(ptr, 1));
const ScoreTestFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_scoretest_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint32ArrayMemory0 = null;
function getUint32ArrayMemory0() {
    if (cachedUint32ArrayMemory0 === null || cachedUint32ArrayMemory0.byteLength === 0) {
        cachedUint32ArrayMemory0 = new Uint32Array(wasm.memory.buffer);
    }
    return cachedUint32ArrayMemory0;
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint32ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('churnlens_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
