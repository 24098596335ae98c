//! Acceptance suite. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any fails.
//!
//! `cargo test --release -p churnlens --test acceptance` runs everything;
//! trailing numbers (`-- 3 4`) select individual criteria.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use churnlens::churn::destination_rate;
use churnlens::cnn::{
    decode_model, encode_model, load_model, save_model, train, CnnError, CnnModel, ConfusionCounts, EvalMetrics,
    Tensor, TrainConfig,
};
use churnlens::imageprep::{FaceTensor, Manifest, PrepOptions};
use churnlens::pipeline::{
    build_training_corpus, gen_synthetic, load_names, parse_report_csv, render_report, run_analysis,
    run_analysis_with, Cohort, CohortReport, CohortWindow, CompositionReport, DropCounts, Group, ReportFormat,
    ReportRow, SynthDataset, SynthSpec, DENOMINATOR_NOTE,
};
use churnlens::snapshots::{diff, parse_snapshot, write_snapshot, FollowerSnapshot, IdSet};
use churnlens::stats::{score_test, two_sided_p, ProportionSample};
use churnlens::weaklabel::Gender;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_identity() -> Check {
    // 9136/(9136+864) = 0.9136 and 9136·9005/(9136·9005+9136·995) = 0.9005
    let counts = ConfusionCounts {
        tp: 9136 * 9005,
        fp: 864 * 9005,
        fn_: 9136 * 995,
        tn: 0,
    };
    let m = EvalMetrics::from_counts(counts);
    let pct = m.f1 * 100.0;
    ensure(
        (m.precision - 0.9136).abs() < 1e-12 && (m.recall - 0.9005).abs() < 1e-12 && (pct - 90.70).abs() <= 0.005,
        format!(
            "precision {:.4}%, recall {:.4}% -> F1 {pct:.4}% (target 90.70 ± 0.005)",
            m.precision * 100.0,
            m.recall * 100.0
        ),
    )
}

fn p_values() -> Check {
    let cases = [(0.23178, 0.8167, 1e-4), (2.2581, 0.0239, 1e-4), (1.411, 0.1582, 1e-4), (2.597, 0.0094, 2e-4)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (z, want, tol) in cases {
        let got = two_sided_p(z);
        let oracle = 2.0 * (1.0 - common::phi_quadrature(z));
        ok &= (got - want).abs() <= tol && (got - oracle).abs() < 1e-9;
        parts.push(format!("z={z} p={got:.6} (expected {want})"));
    }
    ensure(ok, parts.join("; "))
}

/// Half a unit in the last printed decimal of `s`, in percentage points.
fn half_ulp(s: &str) -> f64 {
    let decimals = s.split('.').nth(1).map_or(0, str::len);
    0.5 * 10f64.powi(-(decimals as i32))
}

fn count_reconstruction() -> Check {
    // (before n, after n, printed percentage-point change, printed z)
    let rows = [
        (14504u64, 11147u64, "1.6", "2.597"),
        (20204, 21187, "0.6717", "1.411"),
        (2039, 1587, "-3.7728", "-2.2581"),
        (3682, 3036, "-0.2786", "-0.23178"),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (nb, na, delta_s, z_s) in rows {
        let delta: f64 = delta_s.parse().unwrap();
        let z_want: f64 = z_s.parse().unwrap();
        let h = half_ulp(delta_s);
        let mut found = 0usize;
        let mut best: Option<(f64, u64, u64)> = None;
        let mut worst_agreement = 0.0f64;
        for xb in 0..=nb {
            let pb = xb as f64 / nb as f64;
            let lo = ((pb + (delta - h) / 100.0) * na as f64).ceil().max(0.0) as u64;
            let hi = ((pb + (delta + h) / 100.0) * na as f64).floor().min(na as f64) as u64;
            if lo > hi {
                continue;
            }
            for xa in lo..=hi {
                let d = 100.0 * (xa as f64 / na as f64 - pb);
                if (d - delta).abs() > h || xa + xb == 0 || xa + xb == na + nb {
                    continue;
                }
                let z = common::pooled_z(xa, na, xb, nb);
                if (z - z_want).abs() > 0.03 {
                    continue;
                }
                found += 1;
                let ours = score_test(
                    ProportionSample::new(xa, na).unwrap(),
                    ProportionSample::new(xb, nb).unwrap(),
                )
                .unwrap()
                .z;
                worst_agreement = worst_agreement.max((ours - z).abs());
                if best.is_none_or(|(bz, _, _)| (z - z_want).abs() < (bz - z_want).abs()) {
                    best = Some((z, xb, xa));
                }
            }
        }
        ok &= found > 0 && worst_agreement <= 1e-10;
        match best {
            Some((z, xb, xa)) => parts.push(format!(
                "{nb}/{na}: {found} count pairs, closest {xb}/{xa} z={z:.5} (expected {z_s}), max |Δz| vs crate {worst_agreement:.1e}"
            )),
            None => parts.push(format!("{nb}/{na}: no counts found")),
        }
    }
    ensure(ok, parts.join("; "))
}

fn gradient_check() -> Check {
    let model = CnnModel::initialize(2024);
    let xs = common::random_inputs(4, 99);
    let labels = [0usize, 1, 1, 0];
    let batch = Tensor::new(vec![4, 3, 28, 28], xs.concat()).unwrap();
    let (loss, analytic) = model.backward(&batch, &labels).unwrap();
    let ref_loss = common::mean_loss(model.params(), &xs, &labels);
    let numeric = common::fd_gradient(model.params(), &xs, &labels, 1e-5);
    // Relative error with the denominator floored at 1e-6: components whose
    // magnitude is below the floor are judged on absolute error instead.
    const FLOOR: f64 = 1e-6;
    let mut worst = (0.0f64, 0usize);
    let mut worst_abs = 0.0f64;
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = (a - n).abs();
        worst_abs = worst_abs.max(err);
        let rel = err / a.abs().max(n.abs()).max(FLOOR);
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    ensure(
        worst.0 < 1e-6 && (loss - ref_loss).abs() < 1e-12,
        format!(
            "{} parameters, max relative error {:.2e} at index {}, max absolute error {:.2e}, loss {loss:.12} vs reference {ref_loss:.12}",
            analytic.len(),
            worst.0,
            worst.1,
            worst_abs
        ),
    )
}

fn synth_corpus(seed: u64, spec: &SynthSpec, dir: &std::path::Path) -> (SynthDataset, Vec<(u64, FaceTensor, Gender)>) {
    let ds = gen_synthetic(seed, spec, dir).unwrap();
    let manifest = Manifest::load(ds.manifest_path()).unwrap();
    let (names, _) = load_names(ds.names_path()).unwrap();
    let corpus = build_training_corpus(
        &names,
        &spec.lexicon().unwrap(),
        &manifest,
        &PrepOptions::default(),
        seed,
    )
    .unwrap();
    (ds, corpus.items)
}

fn training_sanity() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        noise: 0.0,
        stayers: 10,
        train_pool: 1400,
        new_before: 5,
        new_after: 5,
        leave_before: 5,
        leave_after: 5,
        ..SynthSpec::default()
    };
    let (ds, items) = synth_corpus(11, &spec, dir.path());
    let truth: std::collections::HashMap<u64, Gender> = ds.users.iter().map(|u| (u.id, u.gender)).collect();
    let (train_part, held_part) = items.split_at(1024);
    let train_set: Vec<(FaceTensor, Gender)> = train_part.iter().map(|(_, t, g)| (t.clone(), *g)).collect();
    // held-out accuracy is scored against the generator's ground truth
    let held: Vec<(FaceTensor, Gender)> = held_part.iter().map(|(id, t, _)| (t.clone(), truth[id])).collect();
    let cfg = TrainConfig::default();
    let a = train(&train_set, Some(&held), &cfg).unwrap();
    let b = train(&train_set, Some(&held), &cfg).unwrap();
    let identical = a.model.params().iter().zip(b.model.params()).all(|(x, y)| x.to_bits() == y.to_bits())
        && a.history == b.history;
    let accs: Vec<String> = a.history.iter().map(|h| format!("{:.4}", h.val_acc.unwrap())).collect();
    let last = a.history.last().unwrap().val_acc.unwrap();
    ensure(
        identical && last >= 0.95,
        format!(
            "{} train / {} held-out, held-out accuracy by epoch [{}], runs bit-identical: {identical}",
            train_set.len(),
            held.len(),
            accs.join(", ")
        ),
    )
}

fn diff_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t0 = Utc.with_ymd_and_hms(2016, 4, 20, 0, 0, 0).unwrap();
    let mut total_ids = 0usize;
    for case in 0..1000 {
        let universe = rng.random_range(1..=20_000u64);
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(0..=10_000usize);
            let v: Vec<u64> = (0..n).map(|_| rng.random_range(0..universe)).collect();
            IdSet::from_unsorted(v).0
        };
        let (b, a, d) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        total_ids += b.len() + a.len();
        let before = FollowerSnapshot::new("acct", t0, b).unwrap();
        let after = FollowerSnapshot::new("acct", t0 + Duration::hours(1), a).unwrap();
        let rec = diff(&before, &after).unwrap();

        let bset: HashSet<u64> = before.follower_ids.iter().collect();
        let aset: HashSet<u64> = after.follower_ids.iter().collect();
        let mut new: Vec<u64> = after.follower_ids.iter().filter(|id| !bset.contains(id)).collect();
        let mut gone: Vec<u64> = before.follower_ids.iter().filter(|id| !aset.contains(id)).collect();
        let mut kept: Vec<u64> = before.follower_ids.iter().filter(|id| aset.contains(id)).collect();
        new.sort_unstable();
        gone.sort_unstable();
        kept.sort_unstable();
        if rec.new_followers.as_slice() != new.as_slice()
            || rec.unfollowers.as_slice() != gone.as_slice()
            || rec.retained.as_slice() != kept.as_slice()
        {
            return Err(format!("case {case}: set mismatch against membership scan"));
        }
        if !rec.is_consistent(before.len(), after.len())
            || after.len() != before.len() - rec.unfollowers.len() + rec.new_followers.len()
        {
            return Err(format!("case {case}: cardinality identity violated"));
        }
        if !rec.unfollowers.is_empty() {
            let dest = FollowerSnapshot::new("dest", t0, d).unwrap();
            let dset: HashSet<u64> = dest.follower_ids.iter().collect();
            let hits = gone.iter().filter(|id| dset.contains(id)).count();
            let rate = destination_rate(&rec.unfollowers, &dest).unwrap();
            if rate.numerator != hits || rate.denominator != gone.len() {
                return Err(format!("case {case}: destination rate mismatch"));
            }
        }
    }
    Ok(format!("1000 random pairs ({total_ids} IDs) match membership scans; identities hold"))
}

fn analysis_spec(new_n: usize, female_after: f64, leave_n: usize) -> SynthSpec {
    SynthSpec {
        stayers: 500,
        train_pool: 0,
        new_before: new_n,
        new_after: new_n,
        leave_before: leave_n,
        leave_after: leave_n,
        female_new_before: 0.5,
        female_new_after: female_after,
        noise: 0.05,
        missing_image_rate: 0.03,
        no_face_rate: 0.03,
        small_image_rate: 0.03,
        decoy_rate: 0.05,
        ..SynthSpec::default()
    }
}

fn new_follower_test(report: &CompositionReport) -> (f64, f64) {
    let t = report.cohort(Cohort::NewFollowers).unwrap().test.unwrap();
    (t.z, t.p_two_sided)
}

fn planted_shift() -> Check {
    let work = tempfile::tempdir().unwrap();
    let train_spec = SynthSpec {
        train_pool: 1100,
        stayers: 10,
        new_before: 5,
        new_after: 5,
        leave_before: 5,
        leave_after: 5,
        noise: 0.05,
        ..SynthSpec::default()
    };
    let (_, items) = synth_corpus(500, &train_spec, &work.path().join("train"));
    let set: Vec<(FaceTensor, Gender)> = items.iter().map(|(_, t, g)| (t.clone(), *g)).collect();
    let model = train(&set, None, &TrainConfig { epochs: 3, ..TrainConfig::default() })
        .unwrap()
        .model;

    let shift_dir = work.path().join("shift");
    let ds = gen_synthetic(1, &analysis_spec(10_000, 0.55, 400), &shift_dir).unwrap();
    save_model(&model, &ds.config.model).unwrap();
    let report = run_analysis(&ds.config).map_err(|e| format!("analysis failed: {e}"))?;
    let nf = report.cohort(Cohort::NewFollowers).unwrap();
    let (z, p) = new_follower_test(&report);
    let (nb, fb) = ds.group_truth(Group::NewBefore);
    let (na, fa) = ds.group_truth(Group::NewAfter);
    let shift_ok = p < 0.01 && z > 0.0;
    let shift = format!(
        "shift: planted {:.2}% -> {:.2}% ({nb}/{na} members), observed {:.2}% -> {:.2}% over {}/{} classified, z={z:.3} p={p:.2e}",
        100.0 * fb as f64 / nb as f64,
        100.0 * fa as f64 / na as f64,
        100.0 * nf.before.female_fraction().unwrap(),
        100.0 * nf.after.female_fraction().unwrap(),
        nf.before.classified,
        nf.after.classified
    );
    std::fs::remove_dir_all(&shift_dir).ok();

    // null seeds use 2000-member cohorts to stay inside the time budget
    let mut inside = 0;
    let mut zs = Vec::new();
    for seed in 1..=20u64 {
        let dir = work.path().join(format!("null-{seed}"));
        let ds = gen_synthetic(seed, &analysis_spec(2000, 0.5, 200), &dir).unwrap();
        let manifest = Manifest::load(ds.manifest_path()).unwrap();
        let report = run_analysis_with(&ds.config, &model, &manifest).map_err(|e| format!("null seed {seed}: {e}"))?;
        let (z, _) = new_follower_test(&report);
        inside += usize::from(z.abs() < 1.96);
        zs.push(format!("{z:.2}"));
        std::fs::remove_dir_all(&dir).ok();
    }
    ensure(
        shift_ok && inside >= 18,
        format!("{shift}; null: |z|<1.96 in {inside}/20 seeds, z = [{}]", zs.join(", ")),
    )
}

fn serialization() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut model = CnnModel::initialize(8);
    model.params_mut()[3] = -0.0;
    model.params_mut()[4] = 1e-310;
    let path = dir.path().join("m.cnnw");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let model_ok = back.params().iter().zip(model.params()).all(|(a, b)| a.to_bits() == b.to_bits());

    let mut bytes = encode_model(&model);
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    std::fs::write(&path, &bytes).unwrap();
    let corrupt_rejected = matches!(load_model(&path), Err(CnnError::ChecksumMismatch))
        && matches!(decode_model(&bytes), Err(CnnError::ChecksumMismatch));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ids = IdSet::from_unsorted((0..10_000).map(|_| rng.random::<u64>()).collect()).0;
    let t = Utc.with_ymd_and_hms(2016, 5, 1, 12, 30, 5).unwrap();
    let snap = FollowerSnapshot::new("candidate_a", t, ids).unwrap();
    let mut snap_ok = true;
    for name in ["s.snap", "s.snap.gz"] {
        let p = dir.path().join(name);
        write_snapshot(&snap, &p).unwrap();
        let parsed = parse_snapshot(&p).unwrap();
        snap_ok &= parsed.snapshot == snap && parsed.duplicate_warnings == 0;
    }

    let report = sample_report();
    let csv = render_report(&report, ReportFormat::Csv);
    let rows = parse_report_csv(&csv).unwrap();
    let expected: Vec<ReportRow> = report.cohorts.iter().map(ReportRow::from).collect();
    let report_ok = rows == expected && render_report(&report, ReportFormat::Csv) == csv;

    ensure(
        model_ok && corrupt_rejected && snap_ok && report_ok,
        format!(
            "model bit-exact: {model_ok}; corrupted model rejected by checksum: {corrupt_rejected}; snapshot .snap/.snap.gz exact: {snap_ok}; report CSV value-exact: {report_ok}"
        ),
    )
}

fn sample_report() -> CompositionReport {
    let w = |size, classified, female, drops: DropCounts| CohortWindow {
        cohort_size: size,
        classified,
        female,
        male: classified - female,
        drops,
    };
    let t = Utc.with_ymd_and_hms(2016, 4, 20, 0, 0, 0).unwrap();
    let before = w(17000, 14504, 8516, DropCounts { no_image: 1200, no_face: 900, below_threshold: 396, below_floor: 0 });
    let after = w(13000, 11147, 6724, DropCounts { no_image: 1000, no_face: 500, below_threshold: 353, below_floor: 0 });
    let s = |c: &CohortWindow| ProportionSample::new(c.female as u64, c.classified as u64).unwrap();
    let degenerate = w(10, 4, 4, DropCounts { no_image: 6, ..DropCounts::default() });
    CompositionReport {
        account: "candidate_a".into(),
        before_start: t,
        event_time: t + Duration::days(7),
        after_end: t + Duration::days(14),
        selections: Vec::new(),
        prob_floor: 0.5,
        denominator: DENOMINATOR_NOTE.into(),
        cohorts: vec![
            CohortReport {
                cohort: Cohort::NewFollowers,
                before,
                after,
                test: Some(score_test(s(&after), s(&before)).unwrap()),
            },
            CohortReport {
                cohort: Cohort::Unfollowers,
                before: degenerate,
                after: degenerate,
                test: None,
            },
        ],
    }
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "metric identity", metric_identity),
        (2, "p-value reproduction", p_values),
        (3, "count reconstruction", count_reconstruction),
        (4, "gradient check", gradient_check),
        (5, "training sanity", training_sanity),
        (6, "diff/transition oracle equivalence", diff_oracle),
        (7, "planted-shift detection", planted_shift),
        (8, "serialization", serialization),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
