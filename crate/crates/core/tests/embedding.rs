use melt_core::embed::{
    nearest_neighbors, sgns_step, train_embeddings, EmbeddingHyperparams, EmbeddingTable,
    Embeddings, LrDecay, NegativeSampler,
};
use melt_core::vocab::{VocabEntry, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab(words: &[&str], counts: &[u64]) -> Vocabulary {
    let entries = words
        .iter()
        .zip(counts)
        .map(|(w, &count)| VocabEntry { word: w.to_string(), count, is_formula: false })
        .collect();
    Vocabulary::from_entries(entries, counts.iter().sum())
}

/// Independent loss evaluation used as the finite-difference oracle.
fn oracle_loss(t: &EmbeddingTable, c: usize, ctx: usize, negs: &[usize]) -> f64 {
    let d = t.dim;
    let v = &t.input[c * d..(c + 1) * d];
    let score = |j: usize| -> f64 { (0..d).map(|k| t.output[j * d + k] * v[k]).sum() };
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    -sig(score(ctx)).ln() - negs.iter().map(|&n| sig(-score(n)).ln()).sum::<f64>()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 { diff } else { diff / scale }
}

#[test]
fn sgns_gradients_match_finite_differences() {
    let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let wr: Vec<&str> = words.iter().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dim = 5;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut t = EmbeddingTable::zeros(vocab(&wr, &[1; 8]), dim);
        t.input.iter_mut().chain(t.output.iter_mut()).for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let c = rng.gen_range(0..8);
        let ctx = rng.gen_range(0..8);
        let mut negs = Vec::new();
        while negs.len() < 3 {
            let n = rng.gen_range(0..8);
            if n != ctx && !negs.contains(&n) {
                negs.push(n);
            }
        }
        let before = t.clone();
        let lr = 1.0;
        let loss = sgns_step(c, ctx, &negs, lr, &mut t).unwrap();
        assert!((loss - oracle_loss(&before, c, ctx, &negs)).abs() < 1e-12);

        let analytic_v: Vec<f64> =
            (0..dim).map(|k| (before.input[c * dim + k] - t.input[c * dim + k]) / lr).collect();
        let fd_v: Vec<f64> = (0..dim)
            .map(|k| {
                let (mut p, mut m) = (before.clone(), before.clone());
                p.input[c * dim + k] += h;
                m.input[c * dim + k] -= h;
                (oracle_loss(&p, c, ctx, &negs) - oracle_loss(&m, c, ctx, &negs)) / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel_err(&analytic_v, &fd_v));

        for &j in std::iter::once(&ctx).chain(&negs) {
            let analytic: Vec<f64> =
                (0..dim).map(|k| (before.output[j * dim + k] - t.output[j * dim + k]) / lr).collect();
            let fd: Vec<f64> = (0..dim)
                .map(|k| {
                    let (mut p, mut m) = (before.clone(), before.clone());
                    p.output[j * dim + k] += h;
                    m.output[j * dim + k] -= h;
                    (oracle_loss(&p, c, ctx, &negs) - oracle_loss(&m, c, ctx, &negs)) / (2.0 * h)
                })
                .collect();
            worst = worst.max(rel_err(&analytic, &fd));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn negative_draws_follow_unigram_power() {
    let counts: Vec<u64> = vec![1000, 700, 400, 250, 120, 80, 40, 20, 10, 5];
    let sampler = NegativeSampler::new(&counts);
    let z: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();
    let mut hist = [0u64; 10];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 1_000_000;
    for _ in 0..draws {
        hist[sampler.sample(&mut rng)] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        let expected = (c as f64).powf(0.75) / z;
        let got = hist[i] as f64 / draws as f64;
        assert!((got - expected).abs() / expected < 0.02, "word {i}: {got} vs {expected}");
    }
}

fn planted_corpus(rng: &mut ChaCha8Rng, n: usize) -> (Vocabulary, Vec<Vec<usize>>) {
    // 0=A 1=B 2=Z, 3.. fillers. A and B always together, Z never with them.
    let mut words = vec!["a".to_string(), "b".to_string(), "z".to_string()];
    words.extend((0..12).map(|i| format!("f{i}")));
    let mut sentences = Vec::new();
    let mut counts = vec![0u64; words.len()];
    for i in 0..n {
        let mut s: Vec<usize> = (0..4).map(|_| rng.gen_range(3..9)).collect();
        if i % 2 == 0 {
            s.insert(rng.gen_range(0..=s.len()), 0);
            s.insert(rng.gen_range(0..=s.len()), 1);
            s.iter_mut().filter(|x| **x >= 9).for_each(|x| *x -= 6);
        } else {
            s = s.into_iter().map(|x| x + 6).collect();
            s.insert(rng.gen_range(0..=s.len()), 2);
        }
        s.iter().for_each(|&w| counts[w] += 1);
        sentences.push(s);
    }
    let wr: Vec<&str> = words.iter().map(String::as_str).collect();
    let v = vocab(&wr, &counts);
    // from_entries re-sorts; remap indices through the words.
    let remap: Vec<usize> = words.iter().map(|w| v.index_of(w).unwrap()).collect();
    let sentences = sentences.into_iter().map(|s| s.into_iter().map(|w| remap[w]).collect()).collect();
    (v, sentences)
}

fn small_hp(seed: u64) -> EmbeddingHyperparams {
    EmbeddingHyperparams {
        dim: 16,
        epochs: 5,
        learning_rate: 0.05,
        window: 3,
        subsample_threshold: 1.0,
        negatives: 5,
        min_count: 0,
        seed,
        lr_decay: LrDecay::Linear,
    }
}

#[test]
fn co_occurring_words_end_up_closer() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (v, sents) = planted_corpus(&mut rng, 600);
        let (table, _) = train_embeddings(&sents, v.clone(), &small_hp(seed)).unwrap();
        let emb = table.to_embeddings();
        let cos = |a: &str, b: &str| {
            melt_core::embed::cosine_similarity(emb.vector(a).unwrap(), emb.vector(b).unwrap()).unwrap()
        };
        assert!(cos("a", "b") > cos("a", "z"), "seed {seed}: {} vs {}", cos("a", "b"), cos("a", "z"));
    }
}

#[test]
fn epoch_loss_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (v, sents) = planted_corpus(&mut rng, 800);
    let (table, report) = train_embeddings(&sents, v, &small_hp(1)).unwrap();
    assert!(table.is_finite());
    let l = &report.epoch_mean_loss;
    let upticks = l.windows(2).filter(|w| w[1] > w[0]).count();
    let big = l.windows(2).filter(|w| w[1] > w[0] * 1.01).count();
    assert!(upticks <= 1 && big == 0, "{l:?}");
}

#[test]
fn training_is_deterministic_and_validates_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (v, sents) = planted_corpus(&mut rng, 100);
    let a = train_embeddings(&sents, v.clone(), &small_hp(7)).unwrap();
    let b = train_embeddings(&sents, v.clone(), &small_hp(7)).unwrap();
    assert_eq!(a.0, b.0);
    let c = train_embeddings(&sents, v.clone(), &small_hp(8)).unwrap();
    assert_ne!(a.0, c.0);
    assert!(train_embeddings(&[], v.clone(), &small_hp(1)).is_err());
    let bad = vec![vec![0, 999]];
    assert!(matches!(
        train_embeddings(&bad, v, &small_hp(1)),
        Err(melt_core::Error::IndexOutOfRange { index: 999, .. })
    ));
}

#[test]
fn default_hyperparameters() {
    let hp = EmbeddingHyperparams::default();
    assert_eq!((hp.dim, hp.epochs, hp.window, hp.negatives, hp.min_count), (200, 30, 8, 15, 5));
    assert_eq!(hp.learning_rate, 0.01);
    assert_eq!(hp.subsample_threshold, 1e-4);
}

#[test]
fn nearest_neighbors_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..5 {
        let (n, dim) = (1500, 12);
        let words: Vec<String> = (0..n).map(|i| format!("w{:05}", (i * 7919) % n)).collect();
        let mut data: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        data[3 * dim..4 * dim].iter_mut().for_each(|x| *x = 0.0);
        let emb = Embeddings::new(words.clone(), dim, data.clone()).unwrap();
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = 1 + trial * 40;
        let exclude = |w: &str| w.ends_with('7');
        let got = nearest_neighbors(&emb, &q, k, exclude).unwrap();

        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut all: Vec<(f64, &str)> = (0..n)
            .filter_map(|i| {
                let row = &data[i * dim..(i + 1) * dim];
                let rn = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                (rn > 0.0 && !exclude(&words[i]))
                    .then(|| (row.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() / (qn * rn), words[i].as_str()))
            })
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        all.truncate(k);
        assert_eq!(got.len(), all.len());
        for (g, (s, w)) in got.iter().zip(&all) {
            assert_eq!(g.word, *w);
            assert!((g.similarity - s).abs() < 1e-9);
        }
    }
}
