use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use kashin::analysis::{
    bench_convergence, bench_matrix_vs_vector, gaussian_matrix, minmax_table_for, write_bench_csv,
    BenchConfig,
};
use kashin::decomp::{kashin_matrix, KashinConfig, MatrixDecomposition};
use kashin::ortho::{OrthogonalOperator, TransformKind};
use kashin::quantize::{
    decode, direct_kmeans, direct_uniform, encode, encode_with_codebook, error_stats,
    fit_shared_codebook, QuantizedTensor,
};
use kashin::tensorio::{
    kqtz_to_bytes, read_kqtz, read_matrix, tensor_from_bytes, write_dense_tensor, write_kdec,
    DType, DenseTensor, KDEC_MAGIC,
};
use kashin::{KashinError, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::Report;

/// Successful completion, or completion with a convergence warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    fn from_converged(all: bool) -> Self {
        if all {
            Outcome::Done
        } else {
            Outcome::NotConverged
        }
    }
}

fn stdout() -> io::StdoutLock<'static> {
    io::stdout().lock()
}

fn operators(flags: &DecompFlags, m: usize, n: usize) -> Result<(OrthogonalOperator, OrthogonalOperator)> {
    let left: TransformKind = flags.left_transform.unwrap_or(flags.transform).into();
    let right: TransformKind = flags.right_transform.unwrap_or(flags.transform).into();
    Ok((
        OrthogonalOperator::generate(left, m, flags.seed)?,
        OrthogonalOperator::generate(right, n, flags.seed.wrapping_add(1))?,
    ))
}

fn decompose_matrix(x: &DMatrix<f64>, flags: &DecompFlags) -> Result<MatrixDecomposition> {
    let (q1, q2) = operators(flags, x.nrows(), x.ncols())?;
    kashin_matrix(x, &q1, &q2, &KashinConfig::new(flags.tol, flags.max_iter))
}

fn warn_convergence(label: &Path, d: &MatrixDecomposition) {
    let r = &d.report;
    if r.converged {
        return;
    }
    let what = if r.poorly_converged {
        "poorly converged"
    } else {
        "did not reach tolerance"
    };
    eprintln!(
        "warning: {}: {what}: relative residual {:.3e} after {} iterations (tol {:.1e})",
        label.display(),
        r.final_residual(),
        r.iterations,
        d.tol
    );
}

fn kinds(d: &MatrixDecomposition) -> (Value, Value) {
    match &d.transforms {
        Some((a, b)) => (json!(a.kind.name()), json!(b.kind.name())),
        None => (Value::Null, Value::Null),
    }
}

pub fn decompose(a: &DecomposeArgs) -> Result<Outcome> {
    let x = read_matrix(&a.input)?;
    let d = decompose_matrix(&x, &a.decomp)?;
    write_kdec(&a.output, &d)?;
    warn_convergence(&a.input, &d);

    let (left, right) = kinds(&d);
    let r = &d.report;
    let mut report = Report::new(vec![
        "input", "rows", "cols", "left", "right", "iterations", "residual", "converged",
        "contraction",
    ]);
    report.push(vec![
        json!(a.input.display().to_string()),
        json!(x.nrows()),
        json!(x.ncols()),
        left,
        right,
        json!(r.iterations),
        json!(r.final_residual()),
        json!(r.converged),
        json!(r.contraction_estimate),
    ]);
    report.emit(a.out.format, &mut stdout())?;
    Ok(Outcome::from_converged(r.converged))
}

struct Loaded {
    input: PathBuf,
    decomposition: MatrixDecomposition,
    source_crc: u32,
}

fn load_for_quantize(path: &Path, flags: &DecompFlags) -> Result<Loaded> {
    let bytes = fs::read(path)?;
    let decomposition = if bytes.starts_with(KDEC_MAGIC) {
        kashin::tensorio::kdec_from_bytes(&bytes)?
    } else {
        decompose_matrix(&tensor_from_bytes(&bytes)?.to_matrix(), flags)?
    };
    Ok(Loaded {
        input: path.to_path_buf(),
        decomposition,
        source_crc: crc32fast::hash(&bytes),
    })
}

fn output_paths(inputs: &[PathBuf], output: &Path) -> Result<Vec<PathBuf>> {
    if inputs.len() == 1 {
        return Ok(vec![output.to_path_buf()]);
    }
    fs::create_dir_all(output)?;
    let mut seen = BTreeSet::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .ok_or_else(|| KashinError::InvalidArgument(format!("{} has no file name", p.display())))?;
            if !seen.insert(stem.to_os_string()) {
                return Err(KashinError::InvalidArgument(format!(
                    "two inputs share the name {}",
                    stem.to_string_lossy()
                )));
            }
            Ok(output.join(stem).with_extension("kqtz"))
        })
        .collect()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| KashinError::InvalidArgument(format!("thread pool: {e}")))
}

pub fn quantize(a: &QuantizeArgs) -> Result<Outcome> {
    let outputs = output_paths(&a.inputs, &a.output)?;
    let pool = pool(a.jobs)?;
    let loaded: Vec<Loaded> = pool.install(|| {
        a.inputs
            .par_iter()
            .map(|p| load_for_quantize(p, &a.decomp))
            .collect::<Result<_>>()
    })?;
    let shared = if a.shared_codebook {
        let refs: Vec<&MatrixDecomposition> = loaded.iter().map(|l| &l.decomposition).collect();
        Some(fit_shared_codebook(&refs, a.bits, a.mode.into(), a.decomp.seed)?)
    } else {
        None
    };
    let artifacts: Vec<(QuantizedTensor, usize)> = pool.install(|| {
        loaded
            .par_iter()
            .zip(&outputs)
            .map(|(l, out)| {
                let mut q = match &shared {
                    Some(cb) => encode_with_codebook(&l.decomposition, cb)?,
                    None => encode(&l.decomposition, a.bits, a.mode.into(), a.decomp.seed)?,
                };
                q.meta.source_crc = l.source_crc;
                let bytes = kqtz_to_bytes(&q)?;
                kashin::tensorio::write_atomic(out, &bytes)?;
                Ok((q, bytes.len()))
            })
            .collect::<Result<_>>()
    })?;

    let mut report = Report::new(vec![
        "input", "output", "rows", "cols", "bits", "mode", "iterations", "residual", "converged",
        "bytes", "bits_per_weight",
    ]);
    let mut all_converged = true;
    for ((l, out), (q, size)) in loaded.iter().zip(&outputs).zip(&artifacts) {
        let d = &l.decomposition;
        warn_convergence(&l.input, d);
        all_converged &= d.report.converged;
        let (m, n) = q.shape;
        report.push(vec![
            json!(l.input.display().to_string()),
            json!(out.display().to_string()),
            json!(m),
            json!(n),
            json!(q.codebook.bits),
            json!(q.mode().to_string()),
            json!(d.report.iterations),
            json!(d.report.final_residual()),
            json!(d.report.converged),
            json!(size),
            json!(*size as f64 * 8.0 / (m * n) as f64),
        ]);
    }
    report.emit(a.out.format, &mut stdout())?;
    Ok(Outcome::from_converged(all_converged))
}

pub fn dequantize(a: &DequantizeArgs) -> Result<Outcome> {
    let q = read_kqtz(&a.input)?;
    let x = decode(&q)?;
    let dtype = match a.dtype {
        Precision::F64 => DType::F64,
        Precision::F32 => DType::F32,
    };
    write_dense_tensor(&a.output, &DenseTensor::from_matrix(&x, dtype))?;
    Ok(Outcome::Done)
}

pub fn stats(a: &StatsArgs) -> Result<Outcome> {
    let original_bytes = fs::read(&a.original)?;
    let x = tensor_from_bytes(&original_bytes)?.to_matrix();
    let q = read_kqtz(&a.artifact)?;
    if q.meta.source_crc != 0 && q.meta.source_crc != crc32fast::hash(&original_bytes) {
        eprintln!(
            "warning: {} was not quantized from {}",
            a.artifact.display(),
            a.original.display()
        );
    }
    let x_hat = decode(&q)?;
    let kashin = error_stats(&x, &x_hat)?;
    let size = kqtz_to_bytes(&q)?.len();
    let weights = x.len() as f64;
    let (u_inf, v_inf) = q.factor_inf_norms()?;
    let bits = q.codebook.bits;

    let mut report = Report::new(vec![
        "method", "bits", "relative_frobenius", "max_abs", "bits_per_weight", "u_inf", "v_inf",
    ]);
    report.push(vec![
        json!(format!("kashin-{}", q.mode())),
        json!(bits),
        json!(kashin.relative_frobenius),
        json!(kashin.max_abs),
        json!(size as f64 * 8.0 / weights),
        json!(u_inf),
        json!(v_inf),
    ]);
    if !a.no_baselines {
        let uniform = error_stats(&x, &direct_uniform(&x, bits)?)?;
        // Codes plus the two grid endpoints.
        let uniform_bpw = bits as f64 + 64.0 / weights;
        report.push(vec![
            json!("uniform"),
            json!(bits),
            json!(uniform.relative_frobenius),
            json!(uniform.max_abs),
            json!(uniform_bpw),
            Value::Null,
            Value::Null,
        ]);
        let kmeans = error_stats(&x, &direct_kmeans(&x, bits, a.seed)?)?;
        let kmeans_bpw = bits as f64 + (32u64 << bits) as f64 / weights;
        report.push(vec![
            json!("kmeans"),
            json!(bits),
            json!(kmeans.relative_frobenius),
            json!(kmeans.max_abs),
            json!(kmeans_bpw),
            Value::Null,
            Value::Null,
        ]);
    }
    report.emit(a.out.format, &mut stdout())?;
    Ok(Outcome::from_converged(q.meta.converged))
}

pub fn estimate(a: &EstimateArgs) -> Result<Outcome> {
    let kinds: Vec<TransformKind> = match a.transform {
        Some(t) if !a.table1 => vec![t.into()],
        _ => TransformKind::ALL.to_vec(),
    };
    let table = minmax_table_for(&kinds, a.n, a.trials, a.seed)?;
    let mut report = Report::new(vec!["family", "n", "trials", "mean", "std", "min", "max"]);
    for est in &table {
        if let Some(note) = est.note() {
            eprintln!("note: {note}");
        }
        let min = est.per_trial_values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = est.per_trial_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.push(vec![
            json!(est.kind.label()),
            json!(est.n),
            json!(est.trials),
            json!(est.mean),
            json!(est.std),
            json!(min),
            json!(max),
        ]);
    }
    report.emit(a.out.format, &mut stdout())?;
    Ok(Outcome::Done)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(stdout()),
    })
}

pub fn bench(a: &BenchArgs) -> Result<Outcome> {
    let config = KashinConfig::new(a.tol, a.max_iter);
    if a.matrix_vs_vector {
        let kind: TransformKind = a.transform.into();
        let r = bench_matrix_vs_vector(kind, a.rows, a.cols, a.trials, &config, a.seed, a.cap)?;
        let mut report = Report::new(vec![
            "family", "rows", "cols", "trials", "matrix_ns", "vector_ns", "speedup",
            "max_residual_gap", "branch_mismatches",
        ]);
        let (mm, vv) = (r.median_matrix_ns(), r.median_vector_ns());
        report.push(vec![
            json!(kind.name()),
            json!(a.rows),
            json!(a.cols),
            json!(a.trials),
            json!(mm),
            json!(vv),
            json!(vv as f64 / mm.max(1) as f64),
            json!(r.max_residual_gap),
            json!(r.branch_mismatches),
        ]);
        report.emit(a.out.format, &mut open_output(&a.output)?)?;
        return Ok(Outcome::Done);
    }

    let cfg = BenchConfig {
        sizes: a.sizes.clone(),
        families: a.families.iter().map(|&f| f.into()).collect(),
        trials: a.trials,
        decomp: config,
        seed: a.seed,
    };
    let records = bench_convergence(&cfg)?;
    write_bench_csv(&records, open_output(&a.output)?)?;
    for &kind in &cfg.families {
        let runs: Vec<_> = records.iter().filter(|r| r.kind == kind).collect();
        if runs.is_empty() {
            continue;
        }
        let reached = runs.iter().filter(|r| r.iterations_to_tol.is_some()).count();
        eprintln!("{}: {reached}/{} runs reached tol {:.1e}", kind.name(), runs.len(), a.tol);
    }
    Ok(Outcome::Done)
}

pub fn gen(a: &GenArgs) -> Result<Outcome> {
    if a.rows == 0 || a.cols == 0 {
        return Err(KashinError::InvalidArgument("rows and cols must be positive".into()));
    }
    let x = match a.constant {
        Some(c) => DMatrix::from_element(a.rows, a.cols, c),
        None => gaussian_matrix(a.rows, a.cols, a.seed),
    };
    let dtype = match a.dtype {
        Precision::F64 => DType::F64,
        Precision::F32 => DType::F32,
    };
    write_dense_tensor(&a.output, &DenseTensor::from_matrix(&x, dtype))?;
    Ok(Outcome::Done)
}
