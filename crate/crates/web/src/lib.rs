//! In-browser demo of three pieces of the library: the two-proportion score
//! test, the face crop/resize step, and a small network trained on the page.
//!
//! Everything here is plain Rust with `wasm-bindgen` attributes, so it also
//! builds and tests natively.

use wasm_bindgen::prelude::*;

use churnlens::cnn::{train_from, CnnModel, TrainConfig};
use churnlens::imageprep::{crop_resize, FaceTensor, RasterImage, TENSOR_SIDE};
use churnlens::pipeline::render_face;
use churnlens::stats::{score_test, ProportionSample};
use churnlens::weaklabel::Gender;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn gender(female: bool) -> Gender {
    if female {
        Gender::Female
    } else {
        Gender::Male
    }
}

#[wasm_bindgen]
pub struct ScoreTest {
    pub z: f64,
    pub p_two_sided: f64,
    pub pooled_p: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Score test of `x1/n1` against `x2/n2`. Errors on impossible counts or a
/// pooled proportion of exactly 0 or 1.
#[wasm_bindgen]
pub fn score_test_counts(x1: u32, n1: u32, x2: u32, n2: u32) -> Result<ScoreTest, JsError> {
    let s1 = ProportionSample::new(x1.into(), n1.into()).map_err(js_err)?;
    let s2 = ProportionSample::new(x2.into(), n2.into()).map_err(js_err)?;
    let r = score_test(s1, s2).map_err(js_err)?;
    Ok(ScoreTest {
        z: r.z,
        p_two_sided: r.p_two_sided,
        pooled_p: r.pooled_p,
        p1: s1.proportion(),
        p2: s2.proportion(),
    })
}

/// Same test from percentages, rounding to the nearest whole count.
#[wasm_bindgen]
pub fn score_test_percent(pct1: f64, n1: u32, pct2: f64, n2: u32) -> Result<ScoreTest, JsError> {
    let count = |pct: f64, n: u32| -> Result<u32, JsError> {
        if !(0.0..=100.0).contains(&pct) {
            return Err(JsError::new("percentages must lie in [0, 100]"));
        }
        Ok((pct / 100.0 * f64::from(n)).round() as u32)
    };
    score_test_counts(count(pct1, n1)?, n1, count(pct2, n2)?, n2)
}

fn rgba(image: &RasterImage) -> Vec<u8> {
    image.pixels().chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

fn tensor_rgba(t: &FaceTensor) -> Vec<u8> {
    let plane = TENSOR_SIDE * TENSOR_SIDE;
    let d = t.data();
    (0..plane)
        .flat_map(|i| {
            let px = |c: usize| (d[c * plane + i] * 255.0).round() as u8;
            [px(0), px(1), px(2), 255]
        })
        .collect()
}

/// A synthetic profile picture, the box the pipeline would crop, and the
/// resulting 28×28 network input.
#[wasm_bindgen]
pub struct FacePreview {
    width: u32,
    height: u32,
    source: Vec<u8>,
    face: [u32; 4],
    decoy: Option<[u32; 4]>,
    tensor: Vec<u8>,
}

#[wasm_bindgen]
impl FacePreview {
    #[wasm_bindgen(constructor)]
    pub fn new(female: bool, noise: f64, decoy: bool, seed: u32) -> Result<FacePreview, JsError> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(JsError::new("noise must lie in [0, 1]"));
        }
        let f = render_face(gender(female), noise, decoy, seed.into());
        let tensor = crop_resize(&f.image, &f.face).map_err(js_err)?;
        let to4 = |b: churnlens::imageprep::FaceBox| [b.x, b.y, b.w, b.h];
        Ok(FacePreview {
            width: f.image.width(),
            height: f.image.height(),
            source: rgba(&f.image),
            face: to4(f.face),
            decoy: f.decoy.map(to4),
            tensor: tensor_rgba(&tensor),
        })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Source image as RGBA bytes, row-major.
    pub fn source_rgba(&self) -> Vec<u8> {
        self.source.clone()
    }

    /// Selected (largest) face box as `[x, y, w, h]`.
    pub fn face_box(&self) -> Vec<u32> {
        self.face.to_vec()
    }

    /// Smaller competing box, empty when there is none.
    pub fn decoy_box(&self) -> Vec<u32> {
        self.decoy.map(|b| b.to_vec()).unwrap_or_default()
    }

    /// The 28×28 crop/resize output as RGBA bytes.
    pub fn tensor_rgba(&self) -> Vec<u8> {
        self.tensor.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn tensor_side(&self) -> u32 {
        TENSOR_SIDE as u32
    }
}

/// A network trained in the page on synthetic faces, one epoch per call.
#[wasm_bindgen]
pub struct DemoClassifier {
    model: CnnModel,
    data: Vec<(FaceTensor, Gender)>,
    config: TrainConfig,
    epochs_done: usize,
}

#[wasm_bindgen]
impl DemoClassifier {
    /// Builds a balanced set of `size` synthetic faces (rounded down to even).
    #[wasm_bindgen(constructor)]
    pub fn new(size: u32, noise: f64, seed: u32) -> Result<DemoClassifier, JsError> {
        if size < 2 {
            return Err(JsError::new("need at least two training faces"));
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(JsError::new("noise must lie in [0, 1]"));
        }
        let seed = u64::from(seed);
        let data = (0..size / 2 * 2)
            .map(|i| {
                let g = gender(i % 2 == 1);
                let f = render_face(g, noise, i % 5 == 0, seed.wrapping_mul(1_000_003).wrapping_add(i.into()));
                crop_resize(&f.image, &f.face).map(|t| (t, g))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(js_err)?;
        Ok(DemoClassifier {
            model: CnnModel::initialize(seed),
            data,
            config: TrainConfig {
                batch_size: 16,
                epochs: 1,
                seed,
                ..TrainConfig::default()
            },
            epochs_done: 0,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn epochs_done(&self) -> u32 {
        self.epochs_done as u32
    }

    /// Runs one epoch and returns `[loss, train_accuracy]`.
    pub fn train_epoch(&mut self) -> Result<Vec<f64>, JsError> {
        let config = TrainConfig {
            seed: self.config.seed.wrapping_add(self.epochs_done as u64),
            ..self.config
        };
        let out = train_from(self.model.clone(), &self.data, None, &config).map_err(js_err)?;
        self.model = out.model;
        self.epochs_done += 1;
        let last = out.history.last().expect("one epoch ran");
        Ok(vec![last.loss, last.train_acc])
    }

    /// Probability that the face [`FacePreview`] shows for the same arguments
    /// is female.
    pub fn female_probability(&self, female: bool, noise: f64, decoy: bool, seed: u32) -> Result<f64, JsError> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(JsError::new("noise must lie in [0, 1]"));
        }
        let f = render_face(gender(female), noise, decoy, seed.into());
        let t = crop_resize(&f.image, &f.face).map_err(js_err)?;
        let p = self.model.predict(&t);
        Ok(if p.gender == Gender::Female {
            p.probability
        } else {
            1.0 - p.probability
        })
    }
}
