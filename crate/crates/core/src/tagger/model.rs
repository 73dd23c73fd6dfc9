//! Model assembly: embeddings → char-CNN → biGRU → emission projection →
//! CRF, with the hand-written backward pass for the whole graph.

use super::config::{TaggerConfig, FEATURE_DIM};
use super::vocab::Vocab;
use super::TaggerError;
use crate::annotation::{decode_iob, encode_document, EntityMention, EntityTypeSet, Tag};
use crate::crf::{viterbi_decode, Transitions};
use crate::nn::{
    bigru, bigru_backward, char_cnn, char_cnn_backward, dropout, dropout_backward, linear,
    linear_backward, BiGruCache, CharCnnCache, CharCnnParams, GruParams, LinearParams, Parameter,
    Tensor,
};
use crate::sections::SectionClasses;
use crate::text::TokenizedDocument;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Per-token input ids for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatSentence {
    pub word_ids: Vec<usize>,
    /// Char ids per token, right-padded with the pad id to length >= 3.
    pub char_ids: Vec<Vec<usize>>,
    pub gaz_ids: Option<Vec<usize>>,
    pub sec_ids: Option<Vec<usize>>,
}

impl FeatSentence {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }
}

/// Map a document plus optional feature annotations onto per-token input
/// ids. Gazetteer mentions are IOB-encoded over the tokens, so they must be
/// token-aligned (the matcher guarantees this).
pub fn featurize_document(
    tdoc: &TokenizedDocument,
    gaz_mentions: Option<&[EntityMention]>,
    section_ids: Option<&[Vec<usize>]>,
    vocab: &Vocab,
    types: &EntityTypeSet,
) -> Result<Vec<FeatSentence>, TaggerError> {
    let gaz_tags: Option<Vec<Vec<Tag>>> = match gaz_mentions {
        Some(ms) => Some(encode_document(tdoc, ms, types)?),
        None => None,
    };
    if let Some(ids) = section_ids {
        if ids.len() != tdoc.sentences.len() {
            return Err(TaggerError::FeatureConfigMismatch(format!(
                "section ids cover {} sentences, document has {}",
                ids.len(),
                tdoc.sentences.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(tdoc.sentences.len());
    for (si, sent) in tdoc.sentences.iter().enumerate() {
        let word_ids = sent.iter().map(|t| vocab.word_id(&t.norm)).collect();
        let char_ids = sent
            .iter()
            .map(|t| {
                let mut ids: Vec<usize> = t.surface.chars().map(|c| vocab.char_id(c)).collect();
                while ids.len() < 3 {
                    ids.push(Vocab::CHAR_PAD);
                }
                ids
            })
            .collect();
        let gaz_ids = gaz_tags
            .as_ref()
            .map(|tags| tags[si].iter().map(|t| t.label_index()).collect());
        let sec_ids = section_ids.map(|ids| ids[si].clone());
        if let Some(ref s) = sec_ids {
            if s.len() != sent.len() {
                return Err(TaggerError::FeatureConfigMismatch(format!(
                    "sentence {si}: {} section ids for {} tokens",
                    s.len(),
                    sent.len()
                )));
            }
        }
        out.push(FeatSentence {
            word_ids,
            char_ids,
            gaz_ids,
            sec_ids,
        });
    }
    Ok(out)
}

/// All learned parameters of the tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub types: EntityTypeSet,
    pub section_classes: SectionClasses,
    pub vocab: Vocab,
    word_emb: Parameter,
    char_emb: Parameter,
    char_cnn: CharCnnParams,
    gaz_emb: Option<Parameter>,
    sec_emb: Option<Parameter>,
    grus: Vec<(GruParams, GruParams)>,
    proj: LinearParams,
    pub transitions: Transitions,
}

pub(super) struct ForwardCache {
    char_caches: Vec<CharCnnCache>,
    repr_masks: Vec<Vec<f64>>,
    layer_caches: Vec<BiGruCache>,
    out_masks: Vec<Vec<f64>>,
    out_dropped: Vec<Vec<f64>>,
}

impl TaggerModel {
    /// Initialize a fresh model. All weights are seeded from `config.seed`.
    pub fn new(
        config: TaggerConfig,
        types: EntityTypeSet,
        section_classes: SectionClasses,
        vocab: Vocab,
    ) -> Result<TaggerModel, TaggerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = types.num_labels();
        let word_emb = Parameter::other(
            "word_emb",
            Tensor::uniform_init(&[vocab.word_count(), config.word_dim], &mut rng),
        );
        let char_emb = Parameter::other(
            "char_emb",
            Tensor::uniform_init(&[vocab.char_count(), config.char_emb_dim], &mut rng),
        );
        let char_cnn = CharCnnParams::new(
            "char_cnn",
            config.char_emb_dim,
            config.char_filters,
            &mut rng,
        );
        let gaz_emb = config.use_gazetteer_feature.then(|| {
            Parameter::other("gaz_emb", Tensor::uniform_init(&[k, FEATURE_DIM], &mut rng))
        });
        let sec_emb = config.use_section_feature.then(|| {
            Parameter::other(
                "sec_emb",
                Tensor::uniform_init(&[section_classes.len(), FEATURE_DIM], &mut rng),
            )
        });
        let repr_dim = config.word_dim
            + config.char_filters
            + gaz_emb.as_ref().map_or(0, |_| FEATURE_DIM)
            + sec_emb.as_ref().map_or(0, |_| FEATURE_DIM);
        let mut grus = Vec::with_capacity(config.num_gru_layers);
        for layer in 0..config.num_gru_layers {
            let d_in = if layer == 0 {
                repr_dim
            } else {
                2 * config.hidden_dim
            };
            grus.push((
                GruParams::new(
                    &format!("gru{layer}.fwd"),
                    d_in,
                    config.hidden_dim,
                    &mut rng,
                ),
                GruParams::new(
                    &format!("gru{layer}.bwd"),
                    d_in,
                    config.hidden_dim,
                    &mut rng,
                ),
            ));
        }
        let proj = LinearParams::new("proj", 2 * config.hidden_dim, k, &mut rng);
        let transitions = Transitions::iob_masked(types.len());
        Ok(TaggerModel {
            config,
            types,
            section_classes,
            vocab,
            word_emb,
            char_emb,
            char_cnn,
            gaz_emb,
            sec_emb,
            grus,
            proj,
            transitions,
        })
    }

    /// Overwrite word-embedding rows for words present in a pretrained
    /// vector map; absent words keep their seeded random init. Vectors are
    /// fine-tuned during training like any other parameter.
    pub fn init_word_embeddings(&mut self, pretrained: &HashMap<String, Vec<f64>>) -> usize {
        let dim = self.config.word_dim;
        let mut loaded = 0;
        let pairs: Vec<(usize, &Vec<f64>)> = self
            .vocab
            .words_with_ids()
            .filter_map(|(w, id)| pretrained.get(w).map(|v| (id, v)))
            .collect();
        for (id, v) in pairs {
            debug_assert_eq!(v.len(), dim);
            self.word_emb.value.row_mut(id).copy_from_slice(v);
            loaded += 1;
        }
        loaded
    }

    /// Stable parameter order used by the optimizer and serialization.
    pub fn params(&self) -> Vec<&Parameter> {
        let mut ps = vec![
            &self.word_emb,
            &self.char_emb,
            &self.char_cnn.filters,
            &self.char_cnn.bias,
        ];
        if let Some(g) = &self.gaz_emb {
            ps.push(g);
        }
        if let Some(s) = &self.sec_emb {
            ps.push(s);
        }
        for (fwd, bwd) in &self.grus {
            ps.extend(fwd.params());
            ps.extend(bwd.params());
        }
        ps.push(&self.proj.w);
        ps.push(&self.proj.b);
        ps.extend(self.transitions.params());
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut ps = vec![
            &mut self.word_emb,
            &mut self.char_emb,
            &mut self.char_cnn.filters,
            &mut self.char_cnn.bias,
        ];
        if let Some(g) = &mut self.gaz_emb {
            ps.push(g);
        }
        if let Some(s) = &mut self.sec_emb {
            ps.push(s);
        }
        for (fwd, bwd) in &mut self.grus {
            ps.extend(fwd.params_mut());
            ps.extend(bwd.params_mut());
        }
        ps.push(&mut self.proj.w);
        ps.push(&mut self.proj.b);
        ps.extend(self.transitions.params_mut());
        ps
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params().iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor]) {
        for (p, t) in self.params_mut().into_iter().zip(snapshot) {
            p.value = t.clone();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.all_finite())
    }

    fn check_features(&self, feat: &FeatSentence) -> Result<(), TaggerError> {
        if self.config.use_gazetteer_feature != feat.gaz_ids.is_some() {
            return Err(TaggerError::FeatureConfigMismatch(
                "gazetteer feature enabled in config but not supplied (or vice versa)".into(),
            ));
        }
        if self.config.use_section_feature != feat.sec_ids.is_some() {
            return Err(TaggerError::FeatureConfigMismatch(
                "section feature enabled in config but not supplied (or vice versa)".into(),
            ));
        }
        Ok(())
    }

    /// Emission scores for one featurized sentence (T × 2k+1). In training
    /// mode dropout is applied to the concatenated token representation and
    /// to the biGRU output, using the supplied RNG.
    pub fn forward(
        &self,
        feat: &FeatSentence,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<Vec<f64>>, TaggerError> {
        self.forward_cached(feat, dropout_rng).map(|(e, _)| e)
    }

    pub(super) fn forward_cached(
        &self,
        feat: &FeatSentence,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Vec<Vec<f64>>, ForwardCache), TaggerError> {
        self.check_features(feat)?;
        if feat.is_empty() {
            return Err(TaggerError::Nn(crate::nn::NnError::EmptySequence));
        }
        let n = feat.len();
        let rate = self.config.dropout_rate;

        let mut repr = Vec::with_capacity(n);
        let mut char_caches = Vec::with_capacity(n);
        for t in 0..n {
            let mut v = self.word_emb.value.row(feat.word_ids[t]).to_vec();
            let char_rows: Vec<Vec<f64>> = feat.char_ids[t]
                .iter()
                .map(|&cid| self.char_emb.value.row(cid).to_vec())
                .collect();
            let (char_vec, cache) = char_cnn(&char_rows, &self.char_cnn)?;
            char_caches.push(cache);
            v.extend_from_slice(&char_vec);
            if let (Some(emb), Some(ids)) = (&self.gaz_emb, &feat.gaz_ids) {
                v.extend_from_slice(emb.value.row(ids[t]));
            }
            if let (Some(emb), Some(ids)) = (&self.sec_emb, &feat.sec_ids) {
                v.extend_from_slice(emb.value.row(ids[t]));
            }
            repr.push(v);
        }

        let mut repr_masks = Vec::with_capacity(n);
        let mut layer_input: Vec<Vec<f64>> = Vec::with_capacity(n);
        for r in &repr {
            let (dropped, mask) = match dropout_rng.as_deref_mut() {
                Some(rng) => dropout(r, rate, rng, true),
                None => dropout(r, rate, &mut ChaCha8Rng::seed_from_u64(0), false),
            };
            repr_masks.push(mask);
            layer_input.push(dropped);
        }

        let mut layer_caches = Vec::with_capacity(self.grus.len());
        let mut current = layer_input;
        for (fwd, bwd) in &self.grus {
            let (out, cache) = bigru(&current, fwd, bwd)?;
            layer_caches.push(cache);
            current = out;
        }

        let mut out_masks = Vec::with_capacity(n);
        let mut out_dropped = Vec::with_capacity(n);
        for o in &current {
            let (dropped, mask) = match dropout_rng.as_deref_mut() {
                Some(rng) => dropout(o, rate, rng, true),
                None => dropout(o, rate, &mut ChaCha8Rng::seed_from_u64(0), false),
            };
            out_masks.push(mask);
            out_dropped.push(dropped);
        }

        let emissions: Result<Vec<Vec<f64>>, _> =
            out_dropped.iter().map(|x| linear(x, &self.proj)).collect();
        let emissions = emissions?;

        Ok((
            emissions,
            ForwardCache {
                char_caches,
                repr_masks,
                layer_caches,
                out_masks,
                out_dropped,
            },
        ))
    }

    /// Backpropagate emission gradients through the whole graph,
    /// accumulating into every parameter's `grad`.
    pub(super) fn backward(
        &mut self,
        feat: &FeatSentence,
        d_emissions: &[Vec<f64>],
        cache: &ForwardCache,
    ) {
        let n = feat.len();
        let two_h = 2 * self.config.hidden_dim;

        // Projection.
        let mut d_out_dropped = vec![vec![0.0; two_h]; n];
        for t in 0..n {
            linear_backward(
                &cache.out_dropped[t],
                &d_emissions[t],
                &mut self.proj,
                &mut d_out_dropped[t],
            );
        }
        let mut d_current: Vec<Vec<f64>> = (0..n)
            .map(|t| dropout_backward(&d_out_dropped[t], &cache.out_masks[t]))
            .collect();

        // GRU stack, top down.
        for (li, (fwd, bwd)) in self.grus.iter_mut().enumerate().rev() {
            d_current = bigru_backward(&d_current, &cache.layer_caches[li], fwd, bwd);
        }

        // Representation dropout.
        let d_repr: Vec<Vec<f64>> = (0..n)
            .map(|t| dropout_backward(&d_current[t], &cache.repr_masks[t]))
            .collect();

        // Split the concatenated representation gradient.
        let word_dim = self.config.word_dim;
        let char_dim = self.config.char_filters;
        for t in 0..n {
            let g = &d_repr[t];
            let mut offset = 0;

            let wrow = self.word_emb.grad.row_mut(feat.word_ids[t]);
            for (w, d) in wrow.iter_mut().zip(&g[offset..offset + word_dim]) {
                *w += d;
            }
            offset += word_dim;

            let d_char_vec = &g[offset..offset + char_dim];
            let l = feat.char_ids[t].len();
            let mut d_char_rows = vec![vec![0.0; self.config.char_emb_dim]; l];
            char_cnn_backward(
                d_char_vec,
                &cache.char_caches[t],
                &mut self.char_cnn,
                &mut d_char_rows,
            );
            for (ci, &cid) in feat.char_ids[t].iter().enumerate() {
                let row = self.char_emb.grad.row_mut(cid);
                for (w, d) in row.iter_mut().zip(&d_char_rows[ci]) {
                    *w += d;
                }
            }
            offset += char_dim;

            if let (Some(emb), Some(ids)) = (&mut self.gaz_emb, &feat.gaz_ids) {
                let row = emb.grad.row_mut(ids[t]);
                for (w, d) in row.iter_mut().zip(&g[offset..offset + FEATURE_DIM]) {
                    *w += d;
                }
                offset += FEATURE_DIM;
            }
            if let (Some(emb), Some(ids)) = (&mut self.sec_emb, &feat.sec_ids) {
                let row = emb.grad.row_mut(ids[t]);
                for (w, d) in row.iter_mut().zip(&g[offset..offset + FEATURE_DIM]) {
                    *w += d;
                }
            }
        }
    }

    /// One training step's worth of gradients: zero the accumulators, run
    /// the forward pass (optionally with dropout), the CRF loss and the full
    /// backward pass. Returns the sentence NLL; gradients are left in every
    /// parameter's `grad`.
    pub fn sentence_nll_backward(
        &mut self,
        feat: &FeatSentence,
        gold_labels: &[usize],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<f64, TaggerError> {
        self.zero_grads();
        let (emissions, cache) = self.forward_cached(feat, dropout_rng)?;
        let nll = crate::crf::crf_nll(&emissions, &mut self.transitions, gold_labels)?;
        self.backward(feat, &nll.d_emissions, &cache);
        Ok(nll.loss)
    }

    /// Decode one featurized sentence into label indices (eval mode).
    pub fn decode_sentence(&self, feat: &FeatSentence) -> Result<Vec<usize>, TaggerError> {
        let emissions = self.forward(feat, None)?;
        let (tags, _score) = viterbi_decode(&emissions, &self.transitions)?;
        Ok(tags)
    }

    /// Predict mentions for a whole document. Features must be supplied
    /// exactly when the config enables them.
    pub fn predict(
        &self,
        tdoc: &TokenizedDocument,
        gaz_mentions: Option<&[EntityMention]>,
        section_ids: Option<&[Vec<usize>]>,
    ) -> Result<Vec<EntityMention>, TaggerError> {
        let feats = featurize_document(tdoc, gaz_mentions, section_ids, &self.vocab, &self.types)?;
        let mut mentions = Vec::new();
        for (sent, feat) in tdoc.sentences.iter().zip(&feats) {
            if feat.is_empty() {
                continue;
            }
            let label_ids = self.decode_sentence(feat)?;
            let tags: Vec<Tag> = label_ids
                .iter()
                .map(|&i| Tag::from_label_index(i))
                .collect();
            mentions.extend(decode_iob(&tdoc.doc.text, sent, &tags, &self.types));
        }
        Ok(mentions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{valid_iob_start, valid_iob_transition};
    use crate::crf::crf_nll;
    use crate::nn::{finite_diff_grad, max_rel_err};
    use crate::text::{tokenize_document, AbbrevList, NormPolicy, RawDocument};

    fn tiny_config() -> TaggerConfig {
        TaggerConfig {
            word_dim: 4,
            char_emb_dim: 3,
            char_filters: 4,
            hidden_dim: 3,
            num_gru_layers: 1,
            dropout_rate: 0.5,
            l2_lambda: 0.0,
            seed: 11,
            ..Default::default()
        }
    }

    fn tdoc(text: &str) -> TokenizedDocument {
        tokenize_document(
            RawDocument::new("d", "t", text),
            &AbbrevList::default(),
            &NormPolicy::matching(),
        )
    }

    fn build_model(config: TaggerConfig, docs: &[&TokenizedDocument]) -> TaggerModel {
        let types = EntityTypeSet::new(["Drug", "Sign"]).unwrap();
        let vocab = Vocab::build(docs);
        TaggerModel::new(config, types, SectionClasses::default_clinical(), vocab).unwrap()
    }

    #[test]
    fn emission_shape_is_tokens_by_labels() {
        // 7 tokens, five types → 7 × 11.
        let doc = tdoc("one two three four five six seven");
        let types = EntityTypeSet::default_clinical();
        let vocab = Vocab::build(&[&doc]);
        let model = TaggerModel::new(
            tiny_config(),
            types,
            SectionClasses::default_clinical(),
            vocab,
        )
        .unwrap();
        let feats = featurize_document(&doc, None, None, &model.vocab, &model.types).unwrap();
        let emissions = model.forward(&feats[0], None).unwrap();
        assert_eq!(emissions.len(), 7);
        assert!(emissions.iter().all(|row| row.len() == 11));
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let doc = tdoc("aspirin was given");
        let model = build_model(tiny_config(), &[&doc]);
        let feats = featurize_document(&doc, None, None, &model.vocab, &model.types).unwrap();
        let a = model.forward(&feats[0], None).unwrap();
        let b = model.forward(&feats[0], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn featurize_gazetteer_iob_ids() {
        // Gazetteer mention over tokens 2..=3 yields [O, O, B-Drug, I-Drug].
        let doc = tdoc("placed on heparin sodium");
        let model = build_model(tiny_config().hybrid(), &[&doc]);
        let gaz = vec![EntityMention::new("Drug", 10, 24, "heparin sodium")];
        let secs = vec![vec![0usize; 4]];
        let feats =
            featurize_document(&doc, Some(&gaz), Some(&secs), &model.vocab, &model.types).unwrap();
        let expect: Vec<usize> = [Tag::Outside, Tag::Outside, Tag::Begin(0), Tag::Inside(0)]
            .iter()
            .map(|t| t.label_index())
            .collect();
        assert_eq!(feats[0].gaz_ids.as_ref().unwrap(), &expect);
    }

    #[test]
    fn no_gaz_mentions_is_all_outside() {
        let doc = tdoc("nothing here");
        let model = build_model(tiny_config().hybrid(), &[&doc]);
        let secs = vec![vec![0usize; 2]];
        let feats =
            featurize_document(&doc, Some(&[]), Some(&secs), &model.vocab, &model.types).unwrap();
        assert!(feats[0]
            .gaz_ids
            .as_ref()
            .unwrap()
            .iter()
            .all(|&id| id == Tag::Outside.label_index()));
    }

    #[test]
    fn unknown_word_maps_to_unk() {
        let doc = tdoc("aspirin");
        let model = build_model(tiny_config(), &[&doc]);
        let other = tdoc("zzzword");
        let feats = featurize_document(&other, None, None, &model.vocab, &model.types).unwrap();
        assert_eq!(feats[0].word_ids[0], Vocab::UNK);
    }

    #[test]
    fn feature_config_mismatch_is_error() {
        let doc = tdoc("aspirin given");
        let hybrid = build_model(tiny_config().hybrid(), &[&doc]);
        assert!(matches!(
            hybrid.predict(&doc, None, None),
            Err(TaggerError::FeatureConfigMismatch(_))
        ));
        let pure = build_model(tiny_config(), &[&doc]);
        let secs = vec![vec![0usize; 2]];
        assert!(matches!(
            pure.predict(&doc, Some(&[]), Some(&secs)),
            Err(TaggerError::FeatureConfigMismatch(_))
        ));
    }

    #[test]
    fn hybrid_without_features_matches_pure_parameter_count() {
        let doc = tdoc("aspirin given daily");
        let pure = build_model(tiny_config(), &[&doc]);
        let mut cfg = tiny_config().hybrid();
        cfg.use_gazetteer_feature = false;
        cfg.use_section_feature = false;
        let also_pure = build_model(cfg, &[&doc]);
        assert_eq!(pure.num_parameters(), also_pure.num_parameters());
        let hybrid = build_model(tiny_config().hybrid(), &[&doc]);
        assert!(hybrid.num_parameters() > pure.num_parameters());
    }

    #[test]
    fn untrained_predictions_are_valid_iob() {
        // The IOB mask alone guarantees structurally valid output.
        let doc = tdoc("alpha beta gamma delta epsilon zeta");
        let model = build_model(tiny_config(), &[&doc]);
        let feats = featurize_document(&doc, None, None, &model.vocab, &model.types).unwrap();
        let ids = model.decode_sentence(&feats[0]).unwrap();
        let tags: Vec<Tag> = ids.iter().map(|&i| Tag::from_label_index(i)).collect();
        assert!(valid_iob_start(tags[0]));
        for w in tags.windows(2) {
            assert!(valid_iob_transition(w[0], w[1]));
        }
        // And predict() yields non-overlapping mentions.
        let mentions = model.predict(&doc, None, None).unwrap();
        for i in 0..mentions.len() {
            for j in i + 1..mentions.len() {
                assert!(!mentions[i].overlaps(&mentions[j]));
            }
        }
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        // Full-graph check on a 3-token hybrid model: the crf_nll gradient
        // w.r.t. every parameter, dropout off.
        let doc = tdoc("on heparin sodium");
        let mut cfg = tiny_config().hybrid();
        cfg.dropout_rate = 0.0;
        let model = build_model(cfg, &[&doc]);
        let gaz = vec![EntityMention::new("Drug", 3, 17, "heparin sodium")];
        let secs = vec![vec![1usize; 3]];
        let feats =
            featurize_document(&doc, Some(&gaz), Some(&secs), &model.vocab, &model.types).unwrap();
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

        // Analytic pass.
        let mut m = model.clone();
        let (emissions, cache) = m.forward_cached(feat, None).unwrap();
        let nll = crf_nll(&emissions, &mut m.transitions, &gold).unwrap();
        m.backward(feat, &nll.d_emissions, &cache);

        let n_params = model.params().len();
        for pi in 0..n_params {
            let value = model.params()[pi].value.clone();
            let name = model.params()[pi].name.clone();
            let analytic = m.params()[pi].grad.clone();
            let num = finite_diff_grad(
                &mut |t| {
                    let mut m2 = model.clone();
                    m2.params_mut()[pi].value = t.clone();
                    loss_of(&m2)
                },
                &value,
                1e-5,
            );
            let err = max_rel_err(&analytic, &num);
            assert!(err < 1e-4, "param {name}: rel err {err}");
        }
    }
}
