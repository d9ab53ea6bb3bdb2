//! Instance files: every generated constant is captured in a flat key-value
//! text file with 17-significant-digit floats, so reloading reproduces the
//! instance bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kvfile::{fmt_f64, join_f64_list, parse_f64_list, KvMap};
use crate::problems::{CompositeProblem, PortfolioInstance, TwoStageQuadInstance};

pub enum Instance {
    Portfolio(PortfolioInstance),
    TwoStage(TwoStageQuadInstance),
}

impl Instance {
    pub fn family(&self) -> &'static str {
        match self {
            Instance::Portfolio(_) => "portfolio",
            Instance::TwoStage(_) => "twostage",
        }
    }
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<()> {
    let mut out = String::new();
    match instance {
        Instance::Portfolio(p) => {
            out.push_str("family = portfolio\n");
            out.push_str(&format!("n = {}\n", p.dim()));
            out.push_str(&format!("gen_seed = {}\n", p.gen_seed()));
            out.push_str(&format!("pieces = {}\n", p.pieces().len()));
            for (i, (v, s)) in p.pieces().iter().enumerate() {
                out.push_str(&format!("piece.{}.v = {}\n", i + 1, fmt_f64(*v)));
                out.push_str(&format!("piece.{}.s = {}\n", i + 1, fmt_f64(*s)));
            }
        }
        Instance::TwoStage(t) => {
            out.push_str("family = twostage\n");
            out.push_str(&format!("n = {}\n", t.dim()));
            out.push_str(&format!("gen_seed = {}\n", t.gen_seed()));
            out.push_str(&format!("lambda0 = {}\n", fmt_f64(t.ridge())));
            out.push_str(&format!("m_estimate = {}\n", fmt_f64(t.m_estimate())));
            out.push_str(&format!("c = {}\n", join_f64_list(t.cost())));
            out.push_str(&format!("mean = {}\n", join_f64_list(t.xi_mean())));
            out.push_str(&format!("std = {}\n", join_f64_list(t.xi_std())));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    load_instance_str(&text)
}

pub fn load_instance_str(text: &str) -> Result<Instance> {
    let mut kv = KvMap::from_text(text)?;
    let family = kv.require("family")?.to_string();
    match family.as_str() {
        "portfolio" => {
            let n: usize = kv.require_parsed("n")?;
            let gen_seed: u64 = kv.get_parsed("gen_seed")?.unwrap_or(0);
            let count: usize = kv.require_parsed("pieces")?;
            let mut pieces = Vec::with_capacity(count);
            for i in 1..=count {
                let v: f64 = kv.require_parsed(&format!("piece.{i}.v"))?;
                let s: f64 = kv.require_parsed(&format!("piece.{i}.s"))?;
                pieces.push((v, s));
            }
            kv.reject_unused()?;
            Ok(Instance::Portfolio(PortfolioInstance::from_pieces(n, pieces, gen_seed)?))
        }
        "twostage" => {
            let n: usize = kv.require_parsed("n")?;
            let gen_seed: u64 = kv.get_parsed("gen_seed")?.unwrap_or(0);
            let ridge: f64 = kv.require_parsed("lambda0")?;
            let m_estimate: f64 = kv.require_parsed("m_estimate")?;
            let cost = parse_f64_list(kv.require("c")?)?;
            let mean = parse_f64_list(kv.require("mean")?)?;
            let std = parse_f64_list(kv.require("std")?)?;
            kv.reject_unused()?;
            Ok(Instance::TwoStage(TwoStageQuadInstance::from_parts(
                n, cost, mean, std, ridge, m_estimate, gen_seed,
            )?))
        }
        other => Err(Error::Config(format!("unknown instance family `{other}`"))),
    }
}
