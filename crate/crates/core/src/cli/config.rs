//! Flat `key = value` run configuration. Every tunable of every command is
//! one key; the resolved set is echoed next to each run's outputs and is
//! itself a valid config file.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fusion::PsoParams;
use crate::learn::{BaseLearner, EnsembleParams, FeatureSubsample, ModelKind, SvmParams, TreeParams};
use crate::masking::MaskConfig;
use crate::poserule::PoseRuleConfig;
use crate::seed::{derive_seed, tag_of};
use crate::sequence::{PipelineConfig, Policy, SynthConfig};
use crate::textbow::Weighting;
use crate::texture::TextureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FuseMethod {
    #[default]
    Average,
    Pso,
    Early,
}

impl FromStr for FuseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(FuseMethod::Average),
            "pso" => Ok(FuseMethod::Pso),
            "early" => Ok(FuseMethod::Early),
            other => Err(Error::arg(format!("unknown fusion method {other:?} (average|pso|early)"))),
        }
    }
}

impl Display for FuseMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FuseMethod::Average => "average",
            FuseMethod::Pso => "pso",
            FuseMethod::Early => "early",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Root of every random stream in the run.
    pub seed: u64,
    pub mask: MaskConfig,
    pub texture: TextureConfig,
    pub tree: TreeParams,
    pub svm: SvmParams,
    pub ensemble: EnsembleParams,
    /// Base learner of `train.kind = ensemble`: tree, forest or svm.
    pub ensemble_base: ModelKind,
    pub pso: PsoParams,
    pub pose: PoseRuleConfig,
    pub synth: SynthConfig,
    pub synth_n: usize,
    pub synth_train_fraction: f64,
    pub policy: Policy,
    pub threshold: f64,
    pub train_kind: ModelKind,
    pub fuse_method: FuseMethod,
    pub bow_max_terms: usize,
    pub bow_min_doc_freq: usize,
    pub bow_weighting: Weighting,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mask: MaskConfig::default(),
            texture: TextureConfig::default(),
            tree: TreeParams::default(),
            svm: SvmParams::default(),
            ensemble: EnsembleParams::default(),
            ensemble_base: ModelKind::Svm,
            pso: PsoParams::default(),
            pose: PoseRuleConfig::default(),
            synth: SynthConfig::default(),
            synth_n: 60,
            synth_train_fraction: 0.67,
            policy: Policy::Any,
            threshold: 0.5,
            train_kind: ModelKind::Forest,
            fuse_method: FuseMethod::Average,
            bow_max_terms: 1000,
            bow_min_doc_freq: 1,
            bow_weighting: Weighting::Count,
        }
    }
}

/// Short flag spellings accepted on the command line.
pub const ALIASES: [(&str, &str); 3] = [("n", "synth.n"), ("method", "fuse.method"), ("kind", "train.kind")];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::arg(format!("{key}: cannot parse {value:?}")))
}

fn parse_offsets(value: &str) -> Result<Vec<(i32, i32)>> {
    value
        .split(';')
        .map(|pair| {
            let (dx, dy) = pair
                .split_once(',')
                .ok_or_else(|| Error::arg(format!("texture.offsets: expected dx,dy but got {pair:?}")))?;
            Ok((parse("texture.offsets", dx.trim())?, parse("texture.offsets", dy.trim())?))
        })
        .collect()
}

fn render_offsets(offsets: &[(i32, i32)]) -> String {
    offsets.iter().map(|(dx, dy)| format!("{dx},{dy}")).collect::<Vec<_>>().join(";")
}

impl RunConfig {
    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.mask;
        let s = &self.synth;
        vec![
            ("seed", self.seed.to_string()),
            ("mask.window", m.window.to_string()),
            ("mask.uniform_sigma_max", m.uniform_sigma_max.to_string()),
            ("mask.white_floor", m.white_floor.to_string()),
            ("mask.cloud_factor", m.cloud_factor.to_string()),
            ("mask.dark_ceiling", m.dark_ceiling.to_string()),
            ("mask.s_lo", m.s_lo.to_string()),
            ("mask.s_hi", m.s_hi.to_string()),
            ("mask.v_lo", m.v_lo.to_string()),
            ("mask.v_hi", m.v_hi.to_string()),
            ("mask.median_k", m.median_k.to_string()),
            ("mask.dilate_k", m.dilate_k.to_string()),
            ("texture.levels", self.texture.levels.to_string()),
            ("texture.offsets", render_offsets(&self.texture.offsets)),
            ("texture.size", self.texture.size.to_string()),
            ("tree.max_depth", self.tree.max_depth.to_string()),
            ("tree.min_leaf", self.tree.min_leaf.to_string()),
            ("tree.n_trees", self.tree.n_trees.to_string()),
            ("tree.feature_subsample", self.tree.feature_subsample.to_string()),
            ("svm.lambda", self.svm.lambda.to_string()),
            ("svm.epochs", self.svm.epochs.to_string()),
            ("ensemble.members", self.ensemble.members.to_string()),
            (
                "ensemble.majority_per_member",
                self.ensemble.majority_per_member.map_or("auto".into(), |n| n.to_string()),
            ),
            ("ensemble.base", self.ensemble_base.to_string()),
            ("pso.particles", self.pso.particles.to_string()),
            ("pso.iterations", self.pso.iterations.to_string()),
            ("pso.inertia", self.pso.inertia.to_string()),
            ("pso.cognitive", self.pso.cognitive.to_string()),
            ("pso.social", self.pso.social.to_string()),
            ("pso.v_max", self.pso.v_max.to_string()),
            ("pose.conf_present", self.pose.conf_present.to_string()),
            ("pose.conf_absent", self.pose.conf_absent.to_string()),
            ("synth.n", self.synth_n.to_string()),
            ("synth.train_fraction", self.synth_train_fraction.to_string()),
            ("synth.size", s.size.to_string()),
            ("synth.n_frames", s.n_frames.to_string()),
            ("synth.cloud_prob", s.cloud_prob.to_string()),
            ("synth.cloud_radius", s.cloud_radius.to_string()),
            ("synth.vegetation_drift", s.vegetation_drift.to_string()),
            ("synth.jitter", s.jitter.to_string()),
            ("synth.water_v", s.water_v.to_string()),
            ("synth.water_s", s.water_s.to_string()),
            ("synth.flood_coverage", s.flood_coverage.to_string()),
            ("policy", self.policy.to_string()),
            ("threshold", self.threshold.to_string()),
            ("train.kind", self.train_kind.to_string()),
            ("fuse.method", self.fuse_method.to_string()),
            ("bow.max_terms", self.bow_max_terms.to_string()),
            ("bow.min_doc_freq", self.bow_min_doc_freq.to_string()),
            ("bow.weighting", self.bow_weighting.to_string()),
        ]
    }

    pub fn is_key(name: &str) -> bool {
        Self::default().entries().iter().any(|(k, _)| *k == name)
    }

    /// Resolves a command-line flag name to its config key.
    pub fn flag_key(name: &str) -> Option<&'static str> {
        if let Some((_, key)) = ALIASES.iter().find(|(a, _)| *a == name) {
            return Some(key);
        }
        Self::default().entries().into_iter().map(|(k, _)| k).find(|k| *k == name)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let m = &mut self.mask;
        let s = &mut self.synth;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "mask.window" => m.window = parse(key, v)?,
            "mask.uniform_sigma_max" => m.uniform_sigma_max = parse(key, v)?,
            "mask.white_floor" => m.white_floor = parse(key, v)?,
            "mask.cloud_factor" => m.cloud_factor = parse(key, v)?,
            "mask.dark_ceiling" => m.dark_ceiling = parse(key, v)?,
            "mask.s_lo" => m.s_lo = parse(key, v)?,
            "mask.s_hi" => m.s_hi = parse(key, v)?,
            "mask.v_lo" => m.v_lo = parse(key, v)?,
            "mask.v_hi" => m.v_hi = parse(key, v)?,
            "mask.median_k" => m.median_k = parse(key, v)?,
            "mask.dilate_k" => m.dilate_k = parse(key, v)?,
            "texture.levels" => self.texture.levels = parse(key, v)?,
            "texture.offsets" => self.texture.offsets = parse_offsets(v)?,
            "texture.size" => self.texture.size = parse(key, v)?,
            "tree.max_depth" => self.tree.max_depth = parse(key, v)?,
            "tree.min_leaf" => self.tree.min_leaf = parse(key, v)?,
            "tree.n_trees" => self.tree.n_trees = parse(key, v)?,
            "tree.feature_subsample" => self.tree.feature_subsample = v.parse::<FeatureSubsample>()?,
            "svm.lambda" => self.svm.lambda = parse(key, v)?,
            "svm.epochs" => self.svm.epochs = parse(key, v)?,
            "ensemble.members" => self.ensemble.members = parse(key, v)?,
            "ensemble.majority_per_member" => {
                self.ensemble.majority_per_member = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "ensemble.base" => {
                let kind: ModelKind = v.parse()?;
                if kind == ModelKind::Ensemble {
                    return Err(Error::arg("ensemble.base must be tree, forest or svm"));
                }
                self.ensemble_base = kind;
            }
            "pso.particles" => self.pso.particles = parse(key, v)?,
            "pso.iterations" => self.pso.iterations = parse(key, v)?,
            "pso.inertia" => self.pso.inertia = parse(key, v)?,
            "pso.cognitive" => self.pso.cognitive = parse(key, v)?,
            "pso.social" => self.pso.social = parse(key, v)?,
            "pso.v_max" => self.pso.v_max = parse(key, v)?,
            "pose.conf_present" => self.pose.conf_present = parse(key, v)?,
            "pose.conf_absent" => self.pose.conf_absent = parse(key, v)?,
            "synth.n" => self.synth_n = parse(key, v)?,
            "synth.train_fraction" => self.synth_train_fraction = parse(key, v)?,
            "synth.size" => s.size = parse(key, v)?,
            "synth.n_frames" => s.n_frames = parse(key, v)?,
            "synth.cloud_prob" => s.cloud_prob = parse(key, v)?,
            "synth.cloud_radius" => s.cloud_radius = parse(key, v)?,
            "synth.vegetation_drift" => s.vegetation_drift = parse(key, v)?,
            "synth.jitter" => s.jitter = parse(key, v)?,
            "synth.water_v" => s.water_v = parse(key, v)?,
            "synth.water_s" => s.water_s = parse(key, v)?,
            "synth.flood_coverage" => s.flood_coverage = parse(key, v)?,
            "policy" => self.policy = v.parse()?,
            "threshold" => self.threshold = parse(key, v)?,
            "train.kind" => self.train_kind = v.parse()?,
            "fuse.method" => self.fuse_method = v.parse()?,
            "bow.max_terms" => self.bow_max_terms = parse(key, v)?,
            "bow.min_doc_freq" => self.bow_min_doc_freq = parse(key, v)?,
            "bow.weighting" => self.bow_weighting = v.parse()?,
            other => return Err(Error::arg(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("config line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value).map_err(|e| {
                Error::arg(format!(
                    "config line {}: {}",
                    no + 1,
                    e.to_string().trim_start_matches("invalid argument: ")
                ))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate()?;
        self.tree_params().validate()?;
        self.svm_params().validate()?;
        self.pso_params().validate()?;
        self.pose.validate()?;
        self.synth.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::arg(format!("threshold must lie in [0, 1], got {}", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.synth_train_fraction) {
            return Err(Error::arg("synth.train_fraction must lie in [0, 1]"));
        }
        if self.ensemble.members == 0 {
            return Err(Error::arg("ensemble.members must be >= 1"));
        }
        Ok(())
    }

    /// The resolved configuration as a config file.
    pub fn to_text(&self, command: &str) -> String {
        let mut out = format!("# resolved configuration of `{command}`\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { mask: self.mask.clone(), texture: self.texture.clone() }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams { seed: derive_seed(self.seed, tag_of("tree")), ..self.tree.clone() }
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams { seed: derive_seed(self.seed, tag_of("svm")), ..self.svm.clone() }
    }

    pub fn pso_params(&self) -> PsoParams {
        PsoParams { seed: derive_seed(self.seed, tag_of("pso")), ..self.pso.clone() }
    }

    pub fn base_learner(&self) -> BaseLearner {
        match self.ensemble_base {
            ModelKind::Tree => BaseLearner::Tree(self.tree_params()),
            ModelKind::Forest => BaseLearner::Forest(self.tree_params()),
            _ => BaseLearner::Svm(self.svm_params()),
        }
    }

    /// Generator settings of the `i`-th synthetic sequence: even indices flood.
    pub fn synth_config(&self, i: usize) -> SynthConfig {
        SynthConfig {
            flood: i.is_multiple_of(2),
            seed: derive_seed(derive_seed(self.seed, tag_of("synth")), i as u64),
            ..self.synth.clone()
        }
    }
}
