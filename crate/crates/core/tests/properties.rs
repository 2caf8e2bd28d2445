mod support;

use adtext::eval::{cross_validate, kfold_indices, pearson, rmse};
use adtext::features::{encode_structured, fit_location_encoder, FeatureMatrix, STRUCTURED_COLUMNS};
use adtext::ingest::read_csv_from;
use adtext::keywords::{highlight, keyword_table, HighlightConfig};
use adtext::pipeline::fit_two_stage;
use adtext::record::{clean, average_price_per_bedroom, ClassifiedRecord, CleaningConfig, ListingCategory, OfferKind};
use adtext::regress::{self, linear::LinearParams, RegressorKind, RegressorParams, RegressorSpec};
use adtext::synth::{generate, SynthConfig};
use adtext::text::{correlation_filter_indices, document_terms, TextConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn arb_record() -> impl Strategy<Value = ClassifiedRecord> {
    (
        "[A-Za-z ]{0,12}",
        "[A-Za-z ]{0,20}",
        0u32..6,
        1u32..5,
        100u64..5000,
        prop::sample::select(vec!["Marina", "JLT", "Palm Jumeirah", "Al Barsha"]),
        1_000u64..2_000_000,
    )
        .prop_map(|(title, description, beds, baths, size, location, price)| ClassifiedRecord {
            title,
            description,
            beds,
            baths,
            size,
            location: location.to_string(),
            price,
        })
}

fn category(offer: bool) -> ListingCategory {
    let mut c = ListingCategory::default();
    if offer {
        c.offer_kind = OfferKind::Sale;
    }
    c
}

proptest! {
    #[test]
    fn cleaning_only_shrinks_and_respects_bounds(records in prop::collection::vec(arb_record(), 0..30), sale in any::<bool>()) {
        let config = CleaningConfig::default();
        let cat = category(sale);
        let out = clean(&records, cat, &config);
        prop_assert!(out.len() <= records.len());
        let (min, max) = config.bounds(cat.offer_kind);
        for r in &out {
            let avg = average_price_per_bedroom(r);
            prop_assert!(min <= avg && avg <= max);
            // numeric fields come from some input record untouched
            prop_assert!(records.iter().any(|o| o.beds == r.beds && o.baths == r.baths && o.size == r.size
                && o.price == r.price && o.location == r.location && o.title.to_lowercase() == r.title));
        }
    }

    #[test]
    fn ingest_counts_reconcile(rows in prop::collection::vec(("[a-z]{0,5}", "-?[0-9]{1,3}|x", "[0-9]{1,4}"), 0..20)) {
        let mut body = String::from("title,description,beds,baths,size,location,price\n");
        for (word, beds, price) in &rows {
            body.push_str(&format!("{word},{word},{beds},1,500,Marina,{price}\n"));
        }
        let (records, report) = read_csv_from(body.as_bytes()).unwrap();
        prop_assert_eq!(report.total(), rows.len());
        prop_assert_eq!(report.accepted, records.len());
    }

    #[test]
    fn location_block_is_one_hot_or_empty(records in prop::collection::vec(arb_record(), 1..20), unseen in any::<bool>()) {
        let encoder = fit_location_encoder(&records).unwrap();
        let mut apply = records.clone();
        if unseen {
            apply[0].location = "Somewhere Else".into();
        }
        let x = encode_structured(&apply, &encoder);
        prop_assert_eq!(&x, &encode_structured(&apply, &encoder));
        for i in 0..x.nrows() {
            let s: f64 = (STRUCTURED_COLUMNS.len()..x.ncols()).map(|j| x.values()[(i, j)]).sum();
            prop_assert!(s == 0.0 || s == 1.0);
        }
        if unseen {
            prop_assert!((STRUCTURED_COLUMNS.len()..x.ncols()).all(|j| x.values()[(0, j)] == 0.0));
        }
    }

    #[test]
    fn filter_keeps_first_varying_column(cols in prop::collection::vec(prop::collection::vec(-3i32..3, 6), 1..6)) {
        let m = DMatrix::from_fn(6, cols.len(), |i, j| f64::from(cols[j][i]));
        let out = correlation_filter_indices(&m, 0.99);
        if let Some(first) = (0..cols.len()).find(|&j| cols[j].iter().any(|&v| v != cols[j][0])) {
            prop_assert_eq!(out.kept.first(), Some(&first));
        } else {
            prop_assert!(out.kept.is_empty());
        }
    }

    #[test]
    fn rmse_and_pearson_match_oracle(pairs in prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 2..50)) {
        let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(support::rel_diff(rmse(&p, &a).unwrap(), support::rmse(&p, &a)) <= 1e-12);
        match (pearson(&p, &a).unwrap(), support::pearson(&p, &a)) {
            (Some(x), Some(y)) => {
                prop_assert!(support::rel_diff(x, y) <= 1e-12);
                prop_assert!((-1.0..=1.0).contains(&x));
                prop_assert_eq!(Some(x), pearson(&a, &p).unwrap());
            }
            (None, None) => {}
            (x, y) => prop_assert!(false, "definedness differs {:?} {:?}", x, y),
        }
    }

    #[test]
    fn folds_partition(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_indices(n, k, seed);
        prop_assert_eq!(folds.len(), k);
        let mut all = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

fn random_design(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let y = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
    (rows, y)
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_residual_orthogonal_to_columns(seed in any::<u64>(), p in 1usize..6) {
        let (rows, y) = random_design(seed, 30, p);
        let x = FeatureMatrix::from_rows(names(p), &rows).unwrap();
        let m = regress::fit(&RegressorSpec::linear(), &x, &y).unwrap();
        let pred = m.predict(&x).unwrap();
        let r: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(r.iter().sum::<f64>().abs() <= 1e-8 * scale);
        for j in 0..p {
            let dot: f64 = rows.iter().zip(&r).map(|(row, ri)| row[j] * ri).sum();
            let norm = rows.iter().map(|row| row[j] * row[j]).sum::<f64>().sqrt();
            prop_assert!(dot.abs() <= 1e-6 * norm * scale, "column {} dot {}", j, dot);
        }
    }

    #[test]
    fn linear_column_rescaling(seed in any::<u64>(), p in 1usize..5, c in 0.01f64..100.0) {
        let (rows, y) = random_design(seed, 25, p);
        let spec = RegressorSpec { params: RegressorParams::Linear(LinearParams { ridge: 1e-10, fit_intercept: true }), seed: 0 };
        let x = FeatureMatrix::from_rows(names(p), &rows).unwrap();
        let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| { let mut r = r.clone(); r[0] *= c; r }).collect();
        let xs = FeatureMatrix::from_rows(names(p), &scaled_rows).unwrap();
        let a = regress::fit(&spec, &x, &y).unwrap();
        let b = regress::fit(&spec, &xs, &y).unwrap();
        let (wa, wb) = (a.linear_weights().unwrap(), b.linear_weights().unwrap());
        prop_assert!((wa.weights[0].1 / c - wb.weights[0].1).abs() <= 1e-6 * wa.weights[0].1.abs().max(1.0));
        for (pa, pb) in a.predict(&x).unwrap().iter().zip(b.predict(&xs).unwrap()) {
            prop_assert!((pa - pb).abs() <= 1e-6 * pa.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn same_seed_same_model(seed in any::<u64>(), kind in prop::sample::select(vec![RegressorKind::Linear, RegressorKind::Mlp, RegressorKind::Svr])) {
        let corpus = generate(&SynthConfig { records: 120, seed, ..Default::default() });
        let spec = RegressorSpec::of_kind(kind).with_seed(seed);
        let a = fit_two_stage(&corpus.records, &spec, &TextConfig::default()).unwrap();
        let b = fit_two_stage(&corpus.records, &spec, &TextConfig::default()).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        let pa = a.predict(&corpus.records);
        let pb = b.predict(&corpus.records);
        prop_assert!(pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn training_means_add_up(seed in any::<u64>()) {
        let corpus = generate(&SynthConfig { records: 150, seed, ..Default::default() });
        let model = fit_two_stage(&corpus.records, &RegressorSpec::linear(), &TextConfig::default()).unwrap();
        let n = corpus.records.len() as f64;
        let mean_price = corpus.records.iter().map(|r| r.price as f64).sum::<f64>() / n;
        let s1 = model.predict_stage1_only(&corpus.records);
        let mean_s1 = s1.iter().sum::<f64>() / n;
        let mean_resid = corpus.records.iter().zip(&s1).map(|(r, p)| r.price as f64 - p).sum::<f64>() / n;
        prop_assert!((mean_s1 + mean_resid - mean_price).abs() <= 1e-9 * mean_price);
        // stage 2 fits the residual target with an intercept, so its mean matches too
        let mean_s2 = model.stage2_component(&corpus.records).iter().sum::<f64>() / n;
        prop_assert!((mean_s2 - mean_resid).abs() <= 1e-6 * mean_price);
    }

    #[test]
    fn keyword_lists_scale_free(seed in any::<u64>(), c in 0.001f64..1000.0) {
        let corpus = generate(&SynthConfig { records: 150, seed, ..Default::default() });
        let mut model = fit_two_stage(&corpus.records, &RegressorSpec::linear(), &TextConfig::default()).unwrap();
        let before = keyword_table(&model, 8).unwrap();
        model.stage2.weights.iter_mut().for_each(|w| *w *= c);
        let after = keyword_table(&model, 8).unwrap();
        let terms = |l: &Vec<adtext::keywords::KeywordEntry>| l.iter().map(|e| e.term.clone()).collect::<Vec<_>>();
        prop_assert_eq!(terms(&before.positive), terms(&after.positive));
        prop_assert_eq!(terms(&before.negative), terms(&after.negative));
    }

    #[test]
    fn token_scores_sum_to_weighted_term_counts(seed in any::<u64>(), ngram_max in 1usize..4) {
        let corpus = generate(&SynthConfig { records: 100, seed, keywords: 8, ..Default::default() });
        let text = TextConfig { ngram_max, df_min_fraction: 0.0, df_max_fraction: 0.9, ..Default::default() };
        let model = fit_two_stage(&corpus.records, &RegressorSpec::linear(), &text).unwrap();
        for record in corpus.records.iter().take(10) {
            let doc = highlight(&model, record, &HighlightConfig::default());
            let total: f64 = doc.tokens.iter().map(|t| t.score).sum();
            let expected: f64 = document_terms(record, &text)
                .iter()
                .filter_map(|t| {
                    let j = model.stage2.columns.iter().position(|c| c == t)?;
                    Some(model.stage2.weights[j] * (t.matches('_').count() + 1) as f64)
                })
                .sum();
            prop_assert!((total - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{} vs {}", total, expected);
        }
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let corpus = generate(&SynthConfig { records: 200, ..Default::default() });
    let run = || cross_validate(&corpus.records, ListingCategory::default(), &RegressorSpec::linear(), &TextConfig::default(), 5, 11).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.per_fold.len(), 10);
    assert!(a.one_stage.rmse_std >= 0.0 && a.two_stage.rmse_std >= 0.0);
    let total: usize = a.per_fold.iter().filter(|f| f.variant == adtext::eval::Variant::OneStage).map(|f| f.test_size).sum();
    assert_eq!(total, 200);
}
