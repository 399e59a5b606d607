//! Subcommand implementations. Every command echoes its resolved settings to
//! `<out>.config.json` next to its primary output, and all writes are atomic.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use strokepipe_core::ann::LmConfig;
use strokepipe_core::eval::{self, EvalReport, Pipeline, PipelineConfig};
use strokepipe_core::features::{read_features_csv, write_features_csv, FeatureKind, FeatureVector};
use strokepipe_core::manifest::{read_manifest, read_risk_csv, write_risk_csv, ClassLabel};
use strokepipe_core::nmf::{self, NmfConfig, NmfModel};
use strokepipe_core::svm::{KernelSpec, SvmModel, TrainOptions};
use strokepipe_core::synth::{gen_images, gen_risk_table, SynthSpec};
use strokepipe_core::util::write_atomic;

use crate::{
    ExtractArgs, FeatureArg, KernelArg, KernelFlags, LoocvArgs, PipelineArg, PredictArgs,
    PreprocessArgs, SynthArgs, Tier1Args, Tier2Args, TrainArgs,
};

/// `report.json -> report.config.json`, `corpus/ -> corpus/synth.config.json`.
fn config_echo_path(out: &Path, dir_name: &str) -> PathBuf {
    if out.extension().is_some() {
        out.with_extension("config.json")
    } else {
        out.join(format!("{dir_name}.config.json"))
    }
}

fn write_config_echo<A: Serialize>(args: &A, out: &Path, name: &str) -> Result<()> {
    let echo = serde_json::json!({ "command": name, "config": args });
    let bytes = serde_json::to_vec_pretty(&echo)?;
    write_atomic(config_echo_path(out, name), &bytes)?;
    Ok(())
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("size {s:?} is not WxH"))?;
    Ok((w.trim().parse().context("bad width")?, h.trim().parse().context("bad height")?))
}

fn parse_mlp_params(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .with_context(|| format!("mlp params {s:?} are not \"scale,offset\""))?;
    Ok((a.trim().parse().context("bad mlp scale")?, b.trim().parse().context("bad mlp offset")?))
}

fn kernel_spec(kind: KernelArg, rbf_sigma: f64, mlp_params: &str) -> Result<KernelSpec> {
    Ok(match kind {
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Rbf => KernelSpec::Rbf { sigma: rbf_sigma },
        KernelArg::Mlp => {
            let (scale, offset) = parse_mlp_params(mlp_params)?;
            KernelSpec::Mlp { scale, offset }
        }
    })
}

fn train_options(k: &KernelFlags) -> TrainOptions {
    TrainOptions { c: k.c, tol: k.tol, scale_features: !k.no_scale, ..Default::default() }
}

fn pipeline_config(
    pre: &PreprocessArgs,
    nmf: &NmfConfigSource,
    kernel_a: KernelSpec,
    kernel_b: KernelSpec,
    svm: TrainOptions,
) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        bpp: pre.bpp,
        resize: parse_size(&pre.resize)?,
        top_fraction: pre.top_fraction,
        nmf: nmf.to_config(),
        kernel_a,
        kernel_b,
        svm,
        ann: LmConfig::default(),
    })
}

/// The subset of NMF settings exposed on the CLI.
pub struct NmfConfigSource {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl NmfConfigSource {
    fn to_config(&self) -> NmfConfig {
        NmfConfig {
            k: self.k,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            weight: None,
        }
    }
}

impl From<&crate::NmfArgs> for NmfConfigSource {
    fn from(a: &crate::NmfArgs) -> Self {
        NmfConfigSource { k: a.nmf_k, max_iters: a.nmf_iters, tol: a.nmf_tol, seed: a.seed }
    }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let size = parse_size(&args.size)?;
    let spec = SynthSpec {
        n_per_class: args.n_per_class,
        image_size: size,
        seed: args.seed,
        ..Default::default()
    };
    if matches!(args.what, crate::SynthWhat::Images | crate::SynthWhat::Both) {
        let gen = gen_images(&spec, &args.out_dir)?;
        println!("wrote {} samples to {}", gen.ids.len(), gen.manifest_path.display());
    }
    if matches!(args.what, crate::SynthWhat::Risk | crate::SynthWhat::Both) {
        let records = gen_risk_table(&spec)?;
        let path = args.out_dir.join("risk.csv");
        write_risk_csv(&path, &records)?;
        println!("wrote {} risk records to {}", records.len(), path.display());
    }
    write_config_echo(args, &args.out_dir, "synth")
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let entries = read_manifest(&args.manifest)?;
    let cfg = pipeline_config(
        &args.pre,
        &NmfConfigSource::from(&args.nmf),
        KernelSpec::Linear,
        KernelSpec::Linear,
        TrainOptions::default(),
    )?;
    let samples = eval::load_samples(&entries, &cfg)?;

    let features: Vec<FeatureVector> = match args.feature {
        FeatureArg::Haralick28 => samples
            .iter()
            .map(|s| {
                let img = if args.masked {
                    s.masked.as_ref().unwrap_or(&s.plain)
                } else {
                    &s.plain
                };
                let q = strokepipe_core::imgio::quantize(img, cfg.bpp)
                    .map_err(|e| e.for_sample(&s.id))?;
                strokepipe_core::haralick::feature_vector_28(&q, &s.id)
                    .map_err(|e| e.for_sample(&s.id))
            })
            .collect::<strokepipe_core::Result<_>>()?,
        FeatureArg::Nmf14 => {
            if args.masked {
                bail!("the factorization path does not accept masked images");
            }
            let basis: NmfModel = match &args.basis {
                Some(path) => NmfModel::load_json(path)?,
                None => {
                    let imgs: Vec<_> = samples.iter().map(|s| s.plain.clone()).collect();
                    let (model, _) = nmf::fit_images(&imgs, &cfg.nmf)?;
                    model
                }
            };
            if let Some(path) = &args.save_basis {
                basis.save_json(path)?;
            }
            samples
                .iter()
                .map(|s| {
                    let h = nmf::project_image(&basis, &s.plain)
                        .map_err(|e| e.for_sample(&s.id))?;
                    FeatureVector::new(h, FeatureKind::Nmf14, &s.id)
                })
                .collect::<strokepipe_core::Result<_>>()?
        }
    };
    write_features_csv(&args.out, &features)?;
    println!("wrote {} feature rows to {}", features.len(), args.out.display());
    write_config_echo(args, &args.out, "extract")
}

fn labels_by_id(manifest: &Path) -> Result<std::collections::BTreeMap<String, ClassLabel>> {
    Ok(read_manifest(manifest)?
        .into_iter()
        .map(|e| (e.id, e.label))
        .collect())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let features = read_features_csv(&args.features)?;
    let labels = labels_by_id(&args.manifest)?;
    let data: Vec<(FeatureVector, f64)> = features
        .into_iter()
        .map(|f| {
            let label = labels
                .get(&f.source_id)
                .with_context(|| format!("sample {} missing from manifest", f.source_id))?;
            Ok((f, label.sign()))
        })
        .collect::<Result<_>>()?;
    let spec = kernel_spec(args.kernel.kernel, args.kernel.rbf_sigma, &args.kernel.mlp_params)?;
    let model = strokepipe_core::svm::train(&data, spec, &train_options(&args.kernel))?;
    if !model.diagnostics.converged {
        eprintln!(
            "warning: solver hit the pass cap ({} passes) before meeting tol",
            model.diagnostics.passes
        );
    }
    model.save_json(&args.out)?;
    println!(
        "trained {} model on {} samples ({} support vectors) -> {}",
        model.feature_kind.as_str(),
        data.len(),
        model.support_vectors.len(),
        args.out.display()
    );
    write_config_echo(args, &args.out, "train")
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let model = SvmModel::load_json(&args.model)?;
    let features = read_features_csv(&args.features)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["id", "predicted", "decision_value", "score"])?;
    for f in &features {
        let fx = model.decision_value(f).map_err(|e| e.for_sample(&f.source_id))?;
        let score = model.score(f).map_err(|e| e.for_sample(&f.source_id))?;
        let label = ClassLabel::from_sign(fx);
        wtr.write_record([f.source_id.as_str(), label.as_str(), &format!("{fx}"), &format!("{score}")])?;
    }
    let bytes = wtr.into_inner()?;
    write_atomic(&args.out, &bytes)?;
    println!("wrote {} predictions to {}", features.len(), args.out.display());
    write_config_echo(args, &args.out, "predict")
}

fn finish_report(report: &EvalReport, out: &Path) -> Result<()> {
    report.save_json(out)?;
    print!("{}", report.render_text());
    println!("report: {}", out.display());
    Ok(())
}

pub fn loocv(args: &LoocvArgs) -> Result<()> {
    let entries = read_manifest(&args.manifest)?;
    let kernel_a =
        kernel_spec(args.kernel.kernel, args.kernel.rbf_sigma, &args.kernel.mlp_params)?;
    let kernel_b = kernel_spec(args.kernel_b, args.rbf_sigma_b, &args.mlp_params_b)?;
    let cfg = pipeline_config(
        &args.pre,
        &NmfConfigSource::from(&args.nmf),
        kernel_a,
        kernel_b,
        train_options(&args.kernel),
    )?;
    let pipeline = match args.pipeline {
        PipelineArg::Haralick => Pipeline::HaralickOnly,
        PipelineArg::Nmf => Pipeline::NmfOnly,
        PipelineArg::Concat => Pipeline::Concatenated,
        PipelineArg::Multilevel => Pipeline::MultiLevel,
        PipelineArg::Tier2 => Pipeline::Tier2Masked,
    };
    let report = eval::loocv_images(&entries, pipeline, &cfg)?;
    finish_report(&report, &args.out)?;
    write_config_echo(args, &args.out, "loocv")
}

pub fn tier1(args: &Tier1Args) -> Result<()> {
    let records = read_risk_csv(&args.risk_csv)?;
    let cfg = LmConfig {
        mu0: args.mu0,
        mu_dec: args.mu_dec,
        mu_inc: args.mu_inc,
        max_epochs: args.max_epochs,
        goal_mse: args.goal_mse,
        seed: args.seed,
        ..Default::default()
    };
    let report = eval::loocv_risk(&records, &cfg)?;
    if let Some(model_path) = &args.out_model {
        let (model, train_report) = strokepipe_core::ann::train_lm(&records, &cfg)?;
        model.save_json(model_path)?;
        println!(
            "full-table model: mse {:.6} after {} epochs -> {}",
            train_report.final_mse,
            train_report.epochs,
            model_path.display()
        );
    }
    finish_report(&report, &args.out)?;
    write_config_echo(args, &args.out, "tier1")
}

pub fn tier2(args: &Tier2Args) -> Result<()> {
    let entries = read_manifest(&args.manifest)?;
    let kernel_a =
        kernel_spec(args.kernel.kernel, args.kernel.rbf_sigma, &args.kernel.mlp_params)?;
    let cfg = pipeline_config(
        &args.pre,
        &NmfConfigSource { k: 14, max_iters: 500, tol: 1e-5, seed: args.seed },
        kernel_a,
        KernelSpec::Linear,
        train_options(&args.kernel),
    )?;
    let report = eval::loocv_images(&entries, Pipeline::Tier2Masked, &cfg)?;
    finish_report(&report, &args.out)?;
    write_config_echo(args, &args.out, "tier2")
}
