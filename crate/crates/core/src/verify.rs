//! Numerical verification harnesses: CRF inference against brute-force
//! enumeration, and analytic gradients against central finite differences.
//! Used by the `gradcheck` subcommand and the acceptance suite.

use crate::annotation::{EntityMention, EntityTypeSet, Tag};
use crate::crf::{brute_force, crf_nll, log_partition, viterbi_decode, Transitions};
use crate::nn::{
    bigru, bigru_backward, char_cnn, char_cnn_backward, finite_diff_grad, gru_cell,
    gru_cell_backward, linear, linear_backward, max_rel_err, CharCnnParams, GruParams,
    LinearParams, Tensor,
};
use crate::sections::SectionClasses;
use crate::tagger::{featurize_document, TaggerConfig, TaggerModel, Vocab};
use crate::text::{tokenize_document, AbbrevList, NormPolicy, RawDocument};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradCheckEntry {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct CrfOracleOutcome {
    pub n_instances: usize,
    pub max_logz_err: f64,
    pub max_viterbi_score_err: f64,
    pub viterbi_tag_mismatches: usize,
}

/// Compare forward-algorithm log-partition and Viterbi decoding against
/// exact enumeration on random instances with T ≤ 5 and K ≤ 4.
pub fn crf_oracle_check(n_instances: usize, seed: u64) -> CrfOracleOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_logz_err = 0.0f64;
    let mut max_score_err = 0.0f64;
    let mut mismatches = 0usize;
    for _ in 0..n_instances {
        let t = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let emissions: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let mut tr = Transitions::zeros(k);
        for p in tr.params_mut() {
            for v in p.value.data_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let bf = brute_force(&emissions, &tr).expect("within oracle bounds");
        let lz = log_partition(&emissions, &tr).expect("non-empty");
        max_logz_err = max_logz_err.max((lz - bf.log_z).abs());
        let (tags, score) = viterbi_decode(&emissions, &tr).expect("non-empty");
        max_score_err = max_score_err.max((score - bf.best_score).abs());
        if tags != bf.best_tags {
            mismatches += 1;
        }
    }
    CrfOracleOutcome {
        n_instances,
        max_logz_err,
        max_viterbi_score_err: max_score_err,
        viterbi_tag_mismatches: mismatches,
    }
}

fn probe(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn check_gru_cell(rng: &mut ChaCha8Rng) -> f64 {
    let p = GruParams::new("g", 4, 5, rng);
    let x = vector(rng, 4);
    let h_prev = vector(rng, 5);
    let w = probe(rng, 5);

    let mut p_m = p.clone();
    let (h, cache) = gru_cell(&x, &h_prev, &p_m).unwrap();
    let dh: Vec<f64> = h.iter().zip(&w).map(|(_, wi)| *wi).collect();
    let mut dx = vec![0.0; 4];
    let mut dh_prev = vec![0.0; 5];
    gru_cell_backward(&dh, &cache, &mut p_m, &mut dx, &mut dh_prev);

    let mut worst = 0.0f64;
    for pi in 0..p.params().len() {
        let value = p.params()[pi].value.clone();
        let num = finite_diff_grad(
            &mut |t| {
                let mut p2 = p.clone();
                p2.params_mut()[pi].value = t.clone();
                let (h, _) = gru_cell(&x, &h_prev, &p2).unwrap();
                h.iter().zip(&w).map(|(a, b)| a * b).sum()
            },
            &value,
            1e-5,
        );
        worst = worst.max(max_rel_err(&p_m.params()[pi].grad, &num));
    }
    // Inputs too.
    let x_t = Tensor::from_vec(&[4], x.clone()).unwrap();
    let num = finite_diff_grad(
        &mut |t| {
            let (h, _) = gru_cell(t.data(), &h_prev, &p).unwrap();
            h.iter().zip(&w).map(|(a, b)| a * b).sum()
        },
        &x_t,
        1e-5,
    );
    worst = worst.max(max_rel_err(&Tensor::from_vec(&[4], dx).unwrap(), &num));
    worst
}

fn check_bigru(rng: &mut ChaCha8Rng) -> f64 {
    let fwd = GruParams::new("f", 3, 4, rng);
    let bwd = GruParams::new("b", 3, 4, rng);
    let xs: Vec<Vec<f64>> = (0..3).map(|_| vector(rng, 3)).collect();
    let w = probe(rng, 8);

    let mut fwd_m = fwd.clone();
    let mut bwd_m = bwd.clone();
    let (out, cache) = bigru(&xs, &fwd_m, &bwd_m).unwrap();
    let d_out: Vec<Vec<f64>> = out
        .iter()
        .map(|o| o.iter().zip(&w).map(|(_, wi)| *wi).collect())
        .collect();
    bigru_backward(&d_out, &cache, &mut fwd_m, &mut bwd_m);

    let loss = |f: &GruParams, b: &GruParams| -> f64 {
        let (out, _) = bigru(&xs, f, b).unwrap();
        out.iter()
            .flat_map(|o| o.iter().zip(&w).map(|(a, b)| a * b))
            .sum()
    };
    let mut worst = 0.0f64;
    for pi in 0..fwd.params().len() {
        let value = fwd.params()[pi].value.clone();
        let num = finite_diff_grad(
            &mut |t| {
                let mut f2 = fwd.clone();
                f2.params_mut()[pi].value = t.clone();
                loss(&f2, &bwd)
            },
            &value,
            1e-5,
        );
        worst = worst.max(max_rel_err(&fwd_m.params()[pi].grad, &num));
        let value = bwd.params()[pi].value.clone();
        let num = finite_diff_grad(
            &mut |t| {
                let mut b2 = bwd.clone();
                b2.params_mut()[pi].value = t.clone();
                loss(&fwd, &b2)
            },
            &value,
            1e-5,
        );
        worst = worst.max(max_rel_err(&bwd_m.params()[pi].grad, &num));
    }
    worst
}

fn check_char_cnn(rng: &mut ChaCha8Rng) -> f64 {
    let p = CharCnnParams::new("c", 3, 4, rng);
    let emb: Vec<Vec<f64>> = (0..5).map(|_| vector(rng, 3)).collect();
    let w = probe(rng, 4);

    let mut p_m = p.clone();
    let (out, cache) = char_cnn(&emb, &p_m).unwrap();
    let dy: Vec<f64> = out.iter().zip(&w).map(|(_, wi)| *wi).collect();
    let mut d_emb = vec![vec![0.0; 3]; 5];
    char_cnn_backward(&dy, &cache, &mut p_m, &mut d_emb);

    let loss = |filters: &Tensor, bias: &Tensor| -> f64 {
        let mut p2 = p.clone();
        p2.filters.value = filters.clone();
        p2.bias.value = bias.clone();
        let (out, _) = char_cnn(&emb, &p2).unwrap();
        out.iter().zip(&w).map(|(a, b)| a * b).sum()
    };
    let num_f = finite_diff_grad(&mut |t| loss(t, &p.bias.value), &p.filters.value, 1e-5);
    let num_b = finite_diff_grad(&mut |t| loss(&p.filters.value, t), &p.bias.value, 1e-5);
    max_rel_err(&p_m.filters.grad, &num_f).max(max_rel_err(&p_m.bias.grad, &num_b))
}

fn check_linear(rng: &mut ChaCha8Rng) -> f64 {
    let p = LinearParams::new("l", 5, 3, rng);
    let x = vector(rng, 5);
    let w = probe(rng, 3);

    let mut p_m = p.clone();
    let y = linear(&x, &p_m).unwrap();
    let dy: Vec<f64> = y.iter().zip(&w).map(|(_, wi)| *wi).collect();
    let mut dx = vec![0.0; 5];
    linear_backward(&x, &dy, &mut p_m, &mut dx);

    let num_w = finite_diff_grad(
        &mut |t| {
            let mut p2 = p.clone();
            p2.w.value = t.clone();
            let y = linear(&x, &p2).unwrap();
            y.iter().zip(&w).map(|(a, b)| a * b).sum()
        },
        &p.w.value,
        1e-5,
    );
    let num_b = finite_diff_grad(
        &mut |t| {
            let mut p2 = p.clone();
            p2.b.value = t.clone();
            let y = linear(&x, &p2).unwrap();
            y.iter().zip(&w).map(|(a, b)| a * b).sum()
        },
        &p.b.value,
        1e-5,
    );
    max_rel_err(&p_m.w.grad, &num_w).max(max_rel_err(&p_m.b.grad, &num_b))
}

fn check_crf_nll(rng: &mut ChaCha8Rng) -> f64 {
    let k = 3;
    let t = 4;
    let emissions: Vec<Vec<f64>> = (0..t).map(|_| vector(rng, k)).collect();
    let mut tr = Transitions::zeros(k);
    for p in tr.params_mut() {
        for v in p.value.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    let gold: Vec<usize> = (0..t).map(|_| rng.gen_range(0..k)).collect();

    let mut tr_m = tr.clone();
    let r = crf_nll(&emissions, &mut tr_m, &gold).unwrap();

    let mut worst = 0.0f64;
    for ti in 0..t {
        let row = Tensor::from_vec(&[k], emissions[ti].clone()).unwrap();
        let num = finite_diff_grad(
            &mut |tens| {
                let mut e2 = emissions.clone();
                e2[ti] = tens.data().to_vec();
                let mut tr2 = tr.clone();
                crf_nll(&e2, &mut tr2, &gold).unwrap().loss
            },
            &row,
            1e-6,
        );
        let ana = Tensor::from_vec(&[k], r.d_emissions[ti].clone()).unwrap();
        worst = worst.max(max_rel_err(&ana, &num));
    }
    for pi in 0..3 {
        let value = tr.params()[pi].value.clone();
        let num = finite_diff_grad(
            &mut |tens| {
                let mut tr2 = tr.clone();
                tr2.params_mut()[pi].value = tens.clone();
                let mut tr3 = tr2.clone();
                crf_nll(&emissions, &mut tr3, &gold).unwrap().loss
            },
            &value,
            1e-6,
        );
        worst = worst.max(max_rel_err(&tr_m.params()[pi].grad, &num));
    }
    worst
}

fn check_tagger_end_to_end(seed: u64) -> f64 {
    let tdoc = tokenize_document(
        RawDocument::new("toy", "note", "on heparin sodium"),
        &AbbrevList::default(),
        &NormPolicy::matching(),
    );
    let config = TaggerConfig {
        word_dim: 4,
        char_emb_dim: 3,
        char_filters: 4,
        hidden_dim: 3,
        num_gru_layers: 1,
        dropout_rate: 0.0,
        l2_lambda: 0.0,
        seed,
        use_gazetteer_feature: true,
        use_section_feature: true,
        ..Default::default()
    };
    let types = EntityTypeSet::new(["Drug"]).unwrap();
    let vocab = Vocab::build(&[&tdoc]);
    let model = TaggerModel::new(config, types, SectionClasses::default_clinical(), vocab).unwrap();
    let gaz = vec![EntityMention::new("Drug", 3, 17, "heparin sodium")];
    let secs = vec![vec![1usize; 3]];
    let feats =
        featurize_document(&tdoc, Some(&gaz), Some(&secs), &model.vocab, &model.types).unwrap();
    let feat = &feats[0];
    let gold = vec![
        Tag::Outside.label_index(),
        Tag::Begin(0).label_index(),
        Tag::Inside(0).label_index(),
    ];

    let loss_of = |m: &TaggerModel| -> f64 {
        let emissions = m.forward(feat, None).unwrap();
        let mut tr = m.transitions.clone();
        crf_nll(&emissions, &mut tr, &gold).unwrap().loss
    };

    let mut m = model.clone();
    m.sentence_nll_backward(feat, &gold, None).unwrap();
    let analytic: Vec<Tensor> = m.params().iter().map(|p| p.grad.clone()).collect();

    let mut worst = 0.0f64;
    for (pi, ana) in analytic.iter().enumerate() {
        let value = model.params()[pi].value.clone();
        let num = finite_diff_grad(
            &mut |t| {
                let mut m2 = model.clone();
                m2.params_mut()[pi].value = t.clone();
                loss_of(&m2)
            },
            &value,
            1e-5,
        );
        worst = worst.max(max_rel_err(ana, &num));
    }
    worst
}

/// Run the full gradient suite with seeded small instances.
pub fn gradient_suite(seed: u64) -> Vec<GradCheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = |name: &str, err: f64, tol: f64| GradCheckEntry {
        name: name.to_string(),
        max_rel_err: err,
        tolerance: tol,
    };
    vec![
        entry("gru_cell", check_gru_cell(&mut rng), 1e-4),
        entry("bigru", check_bigru(&mut rng), 1e-4),
        entry("char_cnn", check_char_cnn(&mut rng), 1e-4),
        entry("linear", check_linear(&mut rng), 1e-4),
        entry("crf_nll", check_crf_nll(&mut rng), 1e-6),
        entry("tagger_end_to_end", check_tagger_end_to_end(seed), 1e-4),
    ]
}
