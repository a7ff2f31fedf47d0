//! Acceptance run: one PASS/FAIL line per criterion. Runs single-threaded.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use colorlearn::crf::{build_neighborhoods, refine, CrfParams};
use colorlearn::evaluation::{delta_e2000, perturb, pixel_error_rate, random_weights, weight_perturbation, SetMetrics, GRID_POINTS};
use colorlearn::experiments::{ablation_ratio, random_weight_baseline, EvalItem};
use colorlearn::globalfeat::{glcm, glcm_features, Direction, FeatureScaling, GlobalFeature, LevelGrid};
use colorlearn::imagecore::{GrayImage, LabImage};
use colorlearn::localfeat::{LocalFeature, LocalFeatureSet, GABOR_DIM, SURF_DIM};
use colorlearn::matching::{match_superpixels, ChromaSeeds, Feature, Seed, WeightVector, SIMPLEX_TOLERANCE};
use colorlearn::pipeline::{colorize, PreparedPair};
use colorlearn::spreader::{build_weights, spread, splat_nearest, SpreadParams};
use colorlearn::superpixel::SuperpixelMap;
use colorlearn::synthetic::{scene, two_family_corpus, Family};
use colorlearn::trainer::{train_model, ClusterEntry, ColorModel, TrainedModel, TrainingPair};
use colorlearn::Config;

type Check = std::result::Result<String, String>;

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let t = Instant::now();
        let outcome = f();
        let took = t.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.2?}, budget {budget:.0?}")),
            Err(e) => (false, e),
        };
        if !ok {
            self.failures += 1;
        }
        println!("{} {name} [{took:.2?}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ciede2000_golden() -> Check {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/ciede2000_sharma.csv");
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line.split(',').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
        let got = delta_e2000([v[1], v[2], v[3]], [v[4], v[5], v[6]]);
        let err = (got - v[7]).abs();
        ensure(err <= 1e-4, || format!("pair {} gives {got}, expected {}", v[0], v[7]))?;
        worst = worst.max(err);
        rows += 1;
    }
    ensure(rows == 34, || format!("expected 34 verification pairs, read {rows}"))?;
    Ok(format!("{rows} pairs, max |error| {worst:.1e}"))
}

fn glcm_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 8;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let grid = LevelGrid {
            width: 16,
            height: 16,
            levels: n,
            cells: (0..256).map(|_| rng.random_range(0..n)).collect(),
        };
        for dir in Direction::ALL {
            let (dx, dy) = dir.offset();
            let mut counts = vec![0u64; n * n];
            for y in 0..16isize {
                for x in 0..16isize {
                    let (x2, y2) = (x + dx, y + dy);
                    if (0..16).contains(&x2) && (0..16).contains(&y2) {
                        counts[grid.cells[(y * 16 + x) as usize] * n + grid.cells[(y2 * 16 + x2) as usize]] += 1;
                    }
                }
            }
            let g = glcm(&grid, dir);
            ensure(g.counts == counts, || format!("case {case} {dir:?}: counts differ"))?;

            let total = counts.iter().sum::<u64>() as f64;
            let p = |i: usize, j: usize| counts[i * n + j] as f64 / total;
            let asm: f64 = (0..n * n).map(|k| p(k / n, k % n).powi(2)).sum();
            let con: f64 = (0..n * n).map(|k| ((k / n) as f64 - (k % n) as f64).powi(2) * p(k / n, k % n)).sum();
            let ent: f64 = (0..n * n).map(|k| p(k / n, k % n)).filter(|&v| v > 0.0).map(|v| -v * v.ln()).sum();
            let mu_i: f64 = (0..n * n).map(|k| (k / n) as f64 * p(k / n, k % n)).sum();
            let mu_j: f64 = (0..n * n).map(|k| (k % n) as f64 * p(k / n, k % n)).sum();
            let var_i: f64 = (0..n * n).map(|k| ((k / n) as f64 - mu_i).powi(2) * p(k / n, k % n)).sum();
            let var_j: f64 = (0..n * n).map(|k| ((k % n) as f64 - mu_j).powi(2) * p(k / n, k % n)).sum();
            let cov: f64 = (0..n * n).map(|k| ((k / n) as f64 - mu_i) * ((k % n) as f64 - mu_j) * p(k / n, k % n)).sum();
            let corr = cov / (var_i * var_j).sqrt();
            let want = [asm, con, corr, ent];
            let got = glcm_features(&g).to_array();
            for k in 0..4 {
                let err = (got[k] - want[k]).abs();
                worst = worst.max(err);
                ensure(err <= 1e-12, || format!("case {case} {dir:?} feature {k}: {} vs {}", got[k], want[k]))?;
            }
        }
    }
    Ok(format!("50 grids x 4 directions, counts exact, max feature error {worst:.1e}"))
}

fn random_feature(rng: &mut ChaCha8Rng) -> LocalFeature {
    LocalFeature {
        intensity: rng.random(),
        std: rng.random::<f64>() * 0.3,
        gabor: (0..GABOR_DIM).map(|_| rng.random::<f64>() * 0.2).collect(),
        surf: (0..SURF_DIM).map(|_| rng.random::<f64>() - 0.5).collect(),
    }
}

/// Exhaustive argmin written from the definition, first minimum wins.
fn oracle_match(w: [f64; 4], t: &[LocalFeature], r: &[LocalFeature]) -> Vec<usize> {
    let vec_term = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    t.iter()
        .map(|ti| {
            let g: Vec<f64> = r
                .iter()
                .map(|rj| {
                    w[0] * (ti.intensity - rj.intensity).abs()
                        + w[1] * (ti.std - rj.std).abs()
                        + w[2] * vec_term(&ti.surf, &rj.surf)
                        + w[3] * vec_term(&ti.gabor, &rj.gabor)
                })
                .collect();
            let min = g.iter().copied().fold(f64::INFINITY, f64::min);
            g.iter().position(|&v| v == min).unwrap()
        })
        .collect()
}

fn matching_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dirichlet = Dirichlet::new([1.0f64; 4]).unwrap();
    let mut ties = 0;
    for case in 0..50 {
        let nt = rng.random_range(1..=30);
        let nr = rng.random_range(1..=40);
        let target: Vec<LocalFeature> = (0..nt).map(|_| random_feature(&mut rng)).collect();
        let mut reference: Vec<LocalFeature> = (0..nr).map(|_| random_feature(&mut rng)).collect();
        // duplicated reference entries and a target copy exercise the tie rule
        if nr > 3 && case % 2 == 0 {
            let src = rng.random_range(0..nr);
            let dst = rng.random_range(0..nr);
            reference[dst] = reference[src].clone();
            ties += 1;
        }
        let mut target = target;
        if case % 3 == 0 {
            target[0] = reference[nr - 1].clone();
            reference[0] = reference[nr - 1].clone();
        }
        let w: [f64; 4] = dirichlet.sample(&mut rng);
        let wv = WeightVector::normalized(w).map_err(|e| e.to_string())?;
        let t = LocalFeatureSet { features: target };
        let r = LocalFeatureSet { features: reference };
        let got = match_superpixels(&wv, &t, &r).map_err(|e| e.to_string())?;
        let want = oracle_match(wv.as_array(), &t.features, &r.features);
        ensure(got == want, || format!("case {case}: {got:?} vs {want:?}"))?;
        if case % 3 == 0 {
            ensure(got[0] == 0, || format!("case {case}: tie not resolved to the lowest id"))?;
        }
    }
    Ok(format!("50 instances agree exactly ({ties} with duplicated references)"))
}

fn seeds_at(points: &[((usize, usize), [f64; 2])]) -> ChromaSeeds {
    ChromaSeeds {
        seeds: points
            .iter()
            .enumerate()
            .map(|(k, &(position, chroma))| Seed { position, chroma, matched: k })
            .collect(),
    }
}

/// Direct dense solve of the free-pixel system (I - W_FF) x = W_FS s.
fn dense_spread(gray: &GrayImage, seeds: &ChromaSeeds) -> Vec<[f64; 2]> {
    let weights = build_weights(gray);
    let n = gray.len();
    let w = gray.width();
    let mut fixed: Vec<Option<[f64; 2]>> = vec![None; n];
    for s in &seeds.seeds {
        fixed[s.position.1 * w + s.position.0] = Some(s.chroma);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let m = free.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DMatrix::<f64>::zeros(m, 2);
    for (k, &i) in free.iter().enumerate() {
        for (j, wij) in weights.row(i) {
            match fixed[j] {
                Some(s) => {
                    b[(k, 0)] += wij * s[0];
                    b[(k, 1)] += wij * s[1];
                }
                None => a[(k, index[j])] -= wij,
            }
        }
    }
    let x = a.lu().solve(&b).expect("free system is nonsingular");
    (0..n)
        .map(|i| fixed[i].unwrap_or_else(|| [x[(index[i], 0)], x[(index[i], 1)]]))
        .collect()
}

fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    // smooth base plus noise, so weights are neither uniform nor degenerate
    let (fx, fy, phase) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6), rng.random_range(0.0..6.0));
    let noise: Vec<f64> = (0..w * h).map(|_| rng.random_range(-8.0..8.0)).collect();
    GrayImage::from_fn(w, h, |x, y| (50.0 + 30.0 * (fx * x as f64 + fy * y as f64 + phase).sin() + noise[y * w + x]).clamp(0.0, 100.0)).unwrap()
}

fn random_seeds(rng: &mut ChaCha8Rng, w: usize, h: usize, k: usize) -> ChromaSeeds {
    let mut pts: Vec<((usize, usize), [f64; 2])> = Vec::new();
    while pts.len() < k {
        let p = (rng.random_range(0..w), rng.random_range(0..h));
        if pts.iter().all(|(q, _)| *q != p) {
            pts.push((p, [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)]));
        }
    }
    seeds_at(&pts)
}

fn spreading_fixtures() -> Check {
    let params = SpreadParams::default();
    // constant luminance, one seed
    let flat = GrayImage::new(24, 18, vec![55.0; 24 * 18]).unwrap();
    let out = spread(&flat, &seeds_at(&[((7, 5), [12.5, -31.0])]), &params).map_err(|e| e.to_string())?;
    let dev = out.a().iter().map(|v| (v - 12.5).abs()).chain(out.b().iter().map(|v| (v + 31.0).abs())).fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("single seed on flat image deviates by {dev}"))?;

    // dense direct solve on small problems
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_dense: f64 = 0.0;
    for case in 0..6 {
        let (w, h) = (rng.random_range(8..=32), rng.random_range(8..=32));
        let gray = random_gray(&mut rng, w, h);
        let k = rng.random_range(1..=12);
        let seeds = random_seeds(&mut rng, w, h, k);
        let got = spread(&gray, &seeds, &params).map_err(|e| e.to_string())?;
        let want = dense_spread(&gray, &seeds);
        for (i, v) in want.iter().enumerate() {
            let e = (got.a()[i] - v[0]).abs().max((got.b()[i] - v[1]).abs());
            worst_dense = worst_dense.max(e);
        }
        ensure(worst_dense <= 1e-6, || format!("case {case} ({w}x{h}, {k} seeds): max difference {worst_dense}"))?;
    }

    // maximum principle
    for case in 0..20 {
        let (w, h) = (rng.random_range(10..=40), rng.random_range(10..=40));
        let gray = random_gray(&mut rng, w, h);
        let k = rng.random_range(2..=15);
        let seeds = random_seeds(&mut rng, w, h, k);
        let out = spread(&gray, &seeds, &params).map_err(|e| e.to_string())?;
        for (c, chan) in [out.a(), out.b()].into_iter().enumerate() {
            let lo = seeds.seeds.iter().map(|s| s.chroma[c]).fold(f64::INFINITY, f64::min);
            let hi = seeds.seeds.iter().map(|s| s.chroma[c]).fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-9 * (hi - lo).abs().max(1.0);
            ensure(chan.iter().all(|&v| v >= lo - slack && v <= hi + slack), || format!("seeding {case}: channel {c} leaves [{lo}, {hi}]"))?;
        }
    }
    Ok(format!("flat deviation {dev:.1e}; dense max difference {worst_dense:.1e} over 6 problems; maximum principle on 20 seedings"))
}

struct SyntheticRun {
    corpus: Vec<(Family, TrainingPair)>,
    trained: TrainedModel,
    test: Vec<(Family, EvalItem)>,
    train_time: Duration,
}

const SYNTH_SIDE: usize = 160;

fn synthetic_run(cfg: &Config) -> std::result::Result<SyntheticRun, String> {
    let t = Instant::now();
    let corpus = two_family_corpus(40, SYNTH_SIDE, 1);
    let pairs: Vec<TrainingPair> = corpus.iter().map(|(_, p)| p.clone()).collect();
    let trained = train_model(&pairs, cfg).map_err(|e| e.to_string())?;
    let train_time = t.elapsed();
    let test = two_family_corpus(20, SYNTH_SIDE, 2)
        .into_iter()
        .map(|(f, p)| Ok((f, EvalItem::new(p.gray, p.ground_truth, p.reference, &trained.model, cfg)?)))
        .collect::<colorlearn::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(SyntheticRun {
        corpus,
        trained,
        test,
        train_time,
    })
}

fn training_dominance(run: &SyntheticRun, cfg: &Config) -> Check {
    let items: Vec<EvalItem> = run.test.iter().map(|(_, it)| it.clone()).collect();
    let rows = random_weight_baseline(&items, 20, cfg.seed, cfg.theta).map_err(|e| e.to_string())?;
    let learned: SetMetrics = rows[0].metrics;
    for r in &rows[1..] {
        ensure(learned.dominates(&r.metrics), || {
            format!("learned (avgE {:.4}, A {:.4}) does not dominate {} (avgE {:.4}, A {:.4})", learned.avg_error, learned.avg_error_rate, r.label, r.metrics.avg_error, r.metrics.avg_error_rate)
        })?;
    }
    let closest = rows[1..].iter().map(|r| r.metrics.avg_error_rate).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} clusters; learned avgE {:.3}, A {:.4}; best random A {closest:.4}; training took {:.1?}",
        run.trained.model.clusters.len(),
        learned.avg_error,
        learned.avg_error_rate,
        run.train_time
    ))
}

fn simplex_contract(run: &SyntheticRun) -> Check {
    let on_simplex = |w: [f64; 4]| (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE && w.iter().all(|&v| v >= 0.0);
    let mut checked = 0;
    for c in &run.trained.model.clusters {
        ensure(on_simplex(c.weights.as_array()), || format!("learned weights {:?}", c.weights))?;
        checked += 1;
        for f in Feature::ALL {
            for (v, w) in weight_perturbation(&c.weights, f) {
                ensure(on_simplex(w.as_array()), || format!("perturbation of {f:?} to {v}: {w:?}"))?;
                checked += 1;
            }
        }
    }
    for w in random_weights(20, 0) {
        ensure(on_simplex(w.as_array()), || format!("random weights {w:?}"))?;
        checked += 1;
    }
    // realistic learned weight rows, as stored in model files
    let table = [
        [0.1007, 0.1734, 0.4509, 0.2750],
        [0.1874, 0.1765, 0.3971, 0.2391],
        [0.1217, 0.1712, 0.4484, 0.2587],
        [0.1555, 0.1978, 0.3819, 0.2647],
        [0.1376, 0.1749, 0.4127, 0.2748],
    ];
    for row in table {
        let s: f64 = row.iter().sum();
        ensure((s - 1.0).abs() < 1e-3, || format!("weight row {row:?} sums to {s}"))?;
        let w = WeightVector::normalized(row).map_err(|e| e.to_string())?;
        for f in Feature::ALL {
            let p = perturb(&w, f, 0.3).map_err(|e| e.to_string())?;
            ensure(on_simplex(p.as_array()), || format!("perturbed weight row {row:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} weight vectors on the simplex"))
}

fn crf_correction() -> Check {
    // 6×6 superpixels of 6×6 pixels over a uniform region
    let side = 36;
    let labels: Vec<usize> = (0..side * side).map(|p| ((p / side) / 6) * 6 + (p % side) / 6).collect();
    let sp = SuperpixelMap::from_labels(side, side, labels).map_err(|e| e.to_string())?;
    let n = sp.count();
    let hoods = build_neighborhoods(&sp.adjacency(), &vec![0.5; n], &vec![0.02; n], 0.04, 0.015, 15, 3);
    let good = [18.0, -7.0];
    let outlier = 14;
    let mut chromas = vec![good; n];
    chromas[outlier] = [-35.0, 40.0];
    let seeds = ChromaSeeds {
        seeds: (0..n)
            .map(|i| Seed {
                position: sp.centers()[i],
                chroma: chromas[i],
                matched: i,
            })
            .collect(),
    };
    let params = CrfParams::default();
    ensure(params.gamma == 1.0 && params.eta == 2.0, || "defaults changed".into())?;
    let out = refine(&seeds, &hoods, &params).chromas();
    let set = &hoods.sets[outlier];
    let mean = [0, 1].map(|c| set.iter().map(|&i| chromas[i][c]).sum::<f64>() / set.len() as f64);
    ensure(out[outlier] == mean, || format!("outlier became {:?}, neighbourhood mean {mean:?}", out[outlier]))?;
    for i in (0..n).filter(|&i| i != outlier) {
        ensure(out[i] == chromas[i], || format!("seed {i} changed to {:?}", out[i]))?;
    }
    Ok(format!("outlier restored to {mean:?} from a {}-member neighbourhood; {} other seeds unchanged", set.len(), n - 1))
}

fn ablation_shape(run: &SyntheticRun, cfg: &Config) -> Check {
    let mut report = Vec::new();
    for family in [Family::Smooth, Family::Striped] {
        let items: Vec<EvalItem> = run.test.iter().filter(|(f, _)| *f == family).map(|(_, it)| it.clone()).collect();
        let cluster = items[0].cluster;
        ensure(items.iter().all(|it| it.cluster == cluster), || format!("{} test images span clusters", family.name()))?;
        // the feature carrying signal for this family is the one the learned weights rely on
        let w = items[0].weights.as_array();
        let informative = Feature::ALL.into_iter().max_by(|a, b| w[a.index()].total_cmp(&w[b.index()])).unwrap();
        let points = ablation_ratio(&items, cfg).map_err(|e| e.to_string())?;
        let curve: Vec<f64> = points.iter().filter(|p| p.feature == informative.name()).map(|p| p.ratio).collect();
        ensure(curve.len() == GRID_POINTS, || "grid size".into())?;
        ensure(curve[0] == 1.0, || format!("{}: ratio at {} = 0 is {}", family.name(), informative.name(), curve[0]))?;
        report.push(format!("{} cluster, {}: ratio at 0 = {:.2}", family.name(), informative.name(), curve[0]));
    }
    let expected = [Feature::Intensity.name(), Feature::Std.name()];
    ensure(report[0].contains(expected[0]) && report[1].contains(expected[1]), || format!("unexpected informative features: {report:?}"))?;
    Ok(report.join("; "))
}

fn one_cluster_model(w: WeightVector) -> ColorModel {
    ColorModel {
        glcm_levels: 8,
        scaling: FeatureScaling::identity(),
        superpixel_size: 100,
        clusters: vec![ClusterEntry {
            center: GlobalFeature::from_array([0.5; 4]),
            weights: w,
            sample_count: 1,
        }],
    }
}

fn self_reference(cfg: &Config) -> Check {
    let mut lines = Vec::new();
    for k in 0..10u64 {
        let (w, h) = (128 + 8 * (k as usize % 4), 128 + 8 * (k as usize % 3));
        let x: LabImage = scene(w, h, 1000 + k);
        let gray = x.luminance();
        let pair = PreparedPair::new(gray.clone(), x.clone(), cfg).map_err(|e| e.to_string())?;
        let out = pair.colorize(&WeightVector::uniform(), cfg).map_err(|e| e.to_string())?;
        let splat = splat_nearest(&gray, &out.seeds).map_err(|e| e.to_string())?;
        let ours = pixel_error_rate(&out.image, &x, cfg.jnd).map_err(|e| e.to_string())?;
        let base = pixel_error_rate(&splat, &x, cfg.jnd).map_err(|e| e.to_string())?;
        ensure(ours < base, || format!("image {k}: spread {ours:.4} not below splat {base:.4}"))?;
        lines.push(format!("{ours:.3}<{base:.3}"));
    }
    Ok(format!("error rates spread<splat: {}", lines.join(" ")))
}

fn runtime_envelope(cfg: &Config) -> Check {
    let x = scene(256, 256, 77);
    let reference = scene(256, 256, 78);
    let gray = x.luminance();
    let model = one_cluster_model(WeightVector::uniform());
    let t = Instant::now();
    let (_, out) = colorize(&gray, &reference, &model, cfg).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    ensure(out.image.width() == 256 && out.image.height() == 256, || "wrong output size".into())?;
    ensure(took <= Duration::from_secs(2), || format!("256x256 colorize took {took:.2?}"))?;
    Ok(format!("256x256 colorize in {took:.2?} on 1 thread"))
}

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().expect("thread pool");
    let cfg = Config::default();
    let mut report = Report { failures: 0 };

    report.run("ciede2000-golden-vectors", Duration::from_secs(1), ciede2000_golden);
    report.run("glcm-oracle", Duration::from_secs(5), glcm_oracle);
    report.run("matching-oracle", Duration::from_secs(10), matching_oracle);
    report.run("spreading-fixtures", Duration::from_secs(30), spreading_fixtures);

    let synthetic = synthetic_run(&cfg);
    match &synthetic {
        Ok(run) => {
            report.run("training-dominance", Duration::from_secs(300), || {
                ensure(run.train_time <= Duration::from_secs(300), || format!("training took {:.1?}", run.train_time))?;
                ensure(run.corpus.len() == 40, || "corpus size".into())?;
                training_dominance(run, &cfg)
            });
            report.run("simplex-contract", Duration::from_secs(60), || simplex_contract(run));
        }
        Err(e) => {
            for name in ["training-dominance", "simplex-contract", "ablation-shape"] {
                report.run(name, Duration::MAX, || Err(format!("synthetic training failed: {e}")));
            }
        }
    }
    report.run("crf-correction", Duration::from_secs(5), crf_correction);
    if let Ok(run) = &synthetic {
        report.run("ablation-shape", Duration::from_secs(600), || ablation_shape(run, &cfg));
    }
    report.run("self-reference-vs-splat", Duration::from_secs(60), || self_reference(&cfg));
    report.run("runtime-envelope-256", Duration::from_secs(2), || runtime_envelope(&cfg));

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
