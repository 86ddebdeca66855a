//! One runner per subcommand. Each resolves its parameters, computes, and
//! returns the files to write.

use anyhow::{bail, ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use stability_lab::challenges::{d_gen_bound, d_gen_exact, random_gset, DEFAULT_RESTARTS};
use stability_lab::fullgroup::{
    adapted_partition, disjoint_gadget_bases, fullgroup_irs_limit_check, local_embedding, sample_word, three_cycle, TableElement,
};
use stability_lab::irs::{combined_uncertainty, EmpiricalIrs, irs_distance, vershik_irs, ColorDistribution, VershikMode, VershikTarget};
use stability_lab::marked::{az_oracle, convergence_table, default_r0, marked_nu, neumann_truncation, tail_defect, KernelOracle, OracleSpec};
use stability_lab::subshift::{ClopenSet, Subshift, Substitution, DEFAULT_TOLERANCE};
use stability_lab::words::ReducedWord;

use crate::config::{Config, List};
use crate::output::Table;
use crate::{AltArgs, DgenArgs, EmbedArgs, FullIrsArgs, KrArgs, NeumannArgs, VershikArgs};

/// Named outputs of one experiment.
pub type Outputs = Vec<(String, Vec<u8>)>;

fn require_seed(cfg: &Config, flag: Option<u64>) -> Result<u64> {
    cfg.get_opt("seed", flag)?
        .context("field `seed` is required for sampled experiments (--seed N or seed = N)")
}

fn subshift(cfg: &Config, flag: Option<String>, tolerance: Option<f64>) -> Result<Subshift> {
    let name: String = cfg.get("substitution", flag, "fibonacci".to_string())?;
    let sub = Substitution::named_or_parse(&name).with_context(|| format!("field `substitution` = {name:?}"))?;
    let tol = cfg.get("tolerance", tolerance, DEFAULT_TOLERANCE)?;
    ensure!(tol > 0.0, "field `tolerance` must be positive");
    Ok(Subshift::new(sub)?.with_tolerance(tol))
}

fn words(list: List<String>) -> Vec<Vec<u8>> {
    list.0.into_iter().map(String::into_bytes).collect()
}

/// Seed words for partition levels; by default a single letter and a
/// 16-letter factor, which give partitions of different depth.
fn levels(cfg: &Config, x: &Subshift, flag: Option<List<String>>) -> Result<Vec<Vec<u8>>> {
    Ok(match cfg.get_opt("levels", flag)? {
        Some(list) => words(list),
        None => vec![x.substitution().alphabet()[..1].to_vec(), sample_word(x, 16)[..16].to_vec()],
    })
}

/// One object per fingerprint, tagged with `tags`.
fn irs_lines(tags: serde_json::Value, mu: &EmpiricalIrs) -> Result<Vec<serde_json::Value>> {
    mu.to_json_lines()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l)?;
            if let (Some(obj), Some(t)) = (v.as_object_mut(), tags.as_object()) {
                obj.extend(t.clone());
            }
            Ok(v)
        })
        .collect()
}

fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        out.extend(serde_json::to_vec(&it)?);
        out.push(b'\n');
    }
    Ok(out)
}

pub fn alt_convergence(cfg: &Config, a: AltArgs) -> Result<Outputs> {
    let from = cfg.get("r-from", a.r_from, 2usize)?;
    let to = cfg.get("r-to", a.r_to, 4usize)?;
    let r_max = cfg.get("r-max", a.r_max, 5usize)?;
    ensure!(from >= 1 && from <= to, "field `r-from` must be in 1..=r-to");
    let oracles = (from..=to)
        .map(|r| OracleSpec::Alt(r).build())
        .collect::<stability_lab::Result<Vec<_>>>()?;
    let seq: Vec<&dyn KernelOracle> = oracles.iter().map(|o| o.as_ref()).collect();
    let rows = convergence_table(&seq, &az_oracle(), r_max).context("alt-convergence")?;
    let mut t = Table::new(
        "alt-convergence: marked distance 2^-nu from (Alt(2r+1), alpha_r, beta_r) to A(Z)",
        &["r", "oracle", "nu", "nu_exact", "distance"],
    )?;
    for (row, r) in rows.iter().zip(from..) {
        t.row([
            r.to_string(),
            row.name.clone(),
            row.nu.value().to_string(),
            matches!(row.nu, stability_lab::marked::Nu::Exact(_)).to_string(),
            row.nu.distance().to_string(),
        ])?;
    }
    Ok(vec![("alt_convergence.csv".into(), t.into_bytes()?)])
}

/// Commutators `[a^k b a^-k, b]`, trivial in `A(Z)` for `k >= 3`.
fn kernel_words(count: usize) -> Result<Vec<ReducedWord>> {
    (0..count)
        .map(|i| {
            let k = 3 + i as i64;
            let a = ReducedWord::letter(2, 1)?;
            let b = ReducedWord::letter(2, 2)?;
            let c = a.pow(k).multiply(&b)?.multiply(&a.pow(-k))?;
            Ok(c.multiply(&b)?.multiply(&c.inverse())?.multiply(&b.inverse())?)
        })
        .collect()
}

pub fn neumann(cfg: &Config, a: NeumannArgs) -> Result<Outputs> {
    let from = cfg.get("n-from", a.n_from, 0usize)?;
    let to = cfg.get("n-to", a.n_to, 3usize)?;
    let len = cfg.get("len", a.len, 3usize)?;
    let r_max = cfg.get("r-max", a.r_max, 4usize)?;
    let n_words = cfg.get("words", a.words, 5usize)?;
    ensure!(from <= to, "field `n-from` must not exceed `n-to`");
    let mut t = Table::new(
        "neumann: marked distance between consecutive truncated diagonal products over Alt(2 r0(m+n) + 1)",
        &["n", "radii", "nu_to_next", "nu_exact", "distance"],
    )?;
    for n in from..=to {
        let cur = neumann_truncation(n, len, &default_r0).with_context(|| format!("neumann n={n}"))?;
        let next = neumann_truncation(n + 1, len, &default_r0)?;
        let nu = marked_nu(&cur.group, &next.group, r_max)?;
        let radii: Vec<String> = cur.radii.iter().map(ToString::to_string).collect();
        t.row([
            n.to_string(),
            radii.join(" "),
            nu.value().to_string(),
            matches!(nu, stability_lab::marked::Nu::Exact(_)).to_string(),
            nu.distance().to_string(),
        ])?;
    }
    let az = az_oracle();
    let diag = neumann_truncation(from, len, &default_r0)?;
    let mut d = Table::new(
        "neumann: factors of the truncated diagonal product where a word trivial in A(Z) survives",
        &["word", "factors", "defect", "tail_start"],
    )?;
    for w in kernel_words(n_words)? {
        let td = tail_defect(&w, &diag.group, &az)?;
        let defect: Vec<String> = td.defect.iter().map(ToString::to_string).collect();
        d.row([td.word.clone(), td.factors.to_string(), defect.join(" "), td.tail_start().to_string()])?;
    }
    Ok(vec![
        ("neumann.csv".into(), t.into_bytes()?),
        ("neumann_tail.csv".into(), d.into_bytes()?),
    ])
}

pub fn vershik(cfg: &Config, a: VershikArgs, seed_flag: Option<u64>) -> Result<Outputs> {
    let colors = cfg.get("colors", a.colors, 2usize)?;
    let radius = cfg.get("radius", a.radius, 2usize)?;
    let ns = cfg.get("ns", a.ns, List(vec![20usize, 40, 80]))?.0;
    let window = cfg.get("window", a.window, radius + 2)?;
    let mode: String = cfg.get("mode", a.mode, "sampled".to_string())?;
    let alpha = ColorDistribution::uniform(colors)?;
    let (reference_mode, level_mode): (VershikMode, Box<dyn Fn(usize) -> VershikMode>) = match mode.as_str() {
        "sampled" => {
            let n = cfg.get("samples", a.samples, 100_000u64)?;
            let seed = require_seed(cfg, seed_flag)?;
            (
                VershikMode::Sampled { n, seed },
                Box::new(move |i| VershikMode::Sampled {
                    n,
                    seed: seed.wrapping_add(1 + i as u64),
                }),
            )
        }
        "exact" => {
            let cap = cfg.get("cap", a.cap, 1usize << 20)?;
            (VershikMode::Exact { cap }, Box::new(move |_| VershikMode::Exact { cap }))
        }
        other => bail!("field `mode` must be exact or sampled, got {other:?}"),
    };
    let reference = vershik_irs(&alpha, VershikTarget::Az { window }, reference_mode, radius).context("vershik reference on A(Z)")?;
    let mut t = Table::new(
        "vershik: coloring IRS of Alt(2n+1) against the coloring IRS of A(Z)",
        &["n", "tv", "combined_stderr", "n_samples", "fingerprints"],
    )?;
    let mut lines = irs_lines(json!({"target": "az", "window": window}), &reference)?;
    for (i, &n) in ns.iter().enumerate() {
        let level = vershik_irs(&alpha, VershikTarget::Alt(n), level_mode(i), radius).with_context(|| format!("vershik n={n}"))?;
        let tv = irs_distance(&level, &reference)?;
        t.row([
            n.to_string(),
            tv.to_string(),
            combined_uncertainty(&level, &reference).to_string(),
            level.n_samples().map_or("exact".to_string(), |s| s.to_string()),
            level.len().to_string(),
        ])?;
        lines.extend(irs_lines(json!({"target": format!("alt:{n}")}), &level)?);
    }
    Ok(vec![
        ("vershik.csv".into(), t.into_bytes()?),
        ("vershik.jsonl".into(), jsonl(lines)?),
    ])
}

pub fn subshift_kr(cfg: &Config, a: KrArgs, tolerance: Option<f64>) -> Result<Outputs> {
    let x = subshift(cfg, a.substitution, tolerance)?;
    let seeds = match cfg.get_opt("seeds", a.seeds)? {
        Some(list) => words(list),
        None => {
            let max_len = cfg.get("seed-len", a.seed_len, 3usize)?;
            (1..=max_len)
                .map(|n| x.language(n).map(|l| l.to_vec()))
                .collect::<stability_lab::Result<Vec<_>>>()?
                .concat()
        }
    };
    let refine_len = cfg.get("refine-len", a.refine_len, 0usize)?;
    let mut t = Table::new(
        &format!("subshift-kr: Kakutani-Rokhlin partitions of {} over return words", x.substitution()),
        &[
            "seed",
            "refined",
            "towers",
            "atoms",
            "min_height",
            "atoms_partition",
            "roof_maps_to_base",
            "measure_sum",
            "measure_ok",
        ],
    )?;
    let mut dumps = Vec::new();
    for u in &seeds {
        let seed = String::from_utf8_lossy(u).to_string();
        let mut parts = vec![(false, x.kr_partition(u).with_context(|| format!("seed {seed}"))?)];
        if refine_len > 0 {
            let pi: Vec<ClopenSet> = x
                .language(refine_len)?
                .iter()
                .map(|w| ClopenSet::cylinder(&x, w, 0))
                .collect::<stability_lab::Result<_>>()?;
            parts.push((true, x.refine_kr(&parts[0].1, &pi)?));
        }
        for (refined, xi) in parts {
            let rep = x.check_kr(&xi)?;
            t.row([
                seed.clone(),
                refined.to_string(),
                xi.towers.len().to_string(),
                rep.atom_count.to_string(),
                rep.min_height.to_string(),
                rep.atoms_partition.to_string(),
                rep.roof_maps_to_base.to_string(),
                rep.measure_sum.to_string(),
                rep.measure_ok.to_string(),
            ])?;
            dumps.push(json!({"seed": seed, "refined": refined, "partition": xi.to_json(&x)?, "report": rep}));
        }
    }
    Ok(vec![
        ("subshift_kr.csv".into(), t.into_bytes()?),
        ("subshift_kr.jsonl".into(), jsonl(dumps)?),
    ])
}

fn gadgets(cfg: &Config, x: &Subshift, count: Option<usize>, len: Option<usize>) -> Result<Vec<TableElement>> {
    let count = cfg.get("gadgets", count, 2usize)?;
    let len = cfg.get("gadget-len", len, 5usize)?;
    let bases = disjoint_gadget_bases(x, count, len).context("choosing gadget generators")?;
    Ok(bases.iter().map(|u| three_cycle(x, u)).collect::<stability_lab::Result<_>>()?)
}

pub fn fullgroup_embed(cfg: &Config, a: EmbedArgs, tolerance: Option<f64>) -> Result<Outputs> {
    let x = subshift(cfg, a.substitution, tolerance)?;
    let gens = gadgets(cfg, &x, a.gadgets, a.gadget_len)?;
    let ns = cfg.get("ns", a.ns, List(vec![1usize, 2]))?.0;
    let levels = levels(cfg, &x, a.levels)?;
    let mut t = Table::new(
        "fullgroup-embed: atom actions of B_S(n) on adapted Kakutani-Rokhlin partitions",
        &[
            "seed",
            "n",
            "ball",
            "atoms",
            "min_height",
            "required_min_height",
            "injective",
            "multiplicative",
            "pairs_checked",
            "block_stab",
            "passed",
        ],
    )?;
    let mut reports = Vec::new();
    for u in &levels {
        let seed = String::from_utf8_lossy(u).to_string();
        for &n in &ns {
            let xi = adapted_partition(&x, &gens, n, u).with_context(|| format!("adapted partition seed {seed} n={n}"))?;
            let rep = local_embedding(&x, &gens, n, &xi)?;
            t.row([
                seed.clone(),
                n.to_string(),
                rep.ball_size.to_string(),
                rep.atom_count.to_string(),
                rep.min_height.to_string(),
                rep.required_min_height.to_string(),
                rep.injective.to_string(),
                rep.multiplicative.to_string(),
                rep.pairs_checked.to_string(),
                rep.block_stab.to_string(),
                rep.passed.to_string(),
            ])?;
            reports.push(json!({"seed": seed, "report": rep.to_json()}));
        }
    }
    Ok(vec![
        ("fullgroup_embed.csv".into(), t.into_bytes()?),
        ("fullgroup_embed.jsonl".into(), jsonl(reports)?),
    ])
}

pub fn fullgroup_irs(cfg: &Config, a: FullIrsArgs, tolerance: Option<f64>) -> Result<Outputs> {
    let x = subshift(cfg, a.substitution, tolerance)?;
    let gens = gadgets(cfg, &x, a.gadgets, a.gadget_len)?;
    let k = cfg.get("k", a.k, 1usize)?;
    let r = cfg.get("radius", a.radius, 1usize)?;
    let levels = levels(cfg, &x, a.levels)?;
    ensure!(levels.len() >= 2, "field `levels` needs at least two seed words");
    let rep = fullgroup_irs_limit_check(&x, &gens, k, r, &levels).context("fullgroup-irs limit check")?;
    let mut t = Table::new(
        &format!("fullgroup-irs: k={k} point stabilizer IRS at radius {r} across partition levels"),
        &["left", "right", "left_atoms", "right_atoms", "tv", "bound", "passed"],
    )?;
    for row in &rep.rows {
        t.row([
            rep.levels[row.left].seed.clone(),
            rep.levels[row.right].seed.clone(),
            rep.levels[row.left].atoms.to_string(),
            rep.levels[row.right].atoms.to_string(),
            row.tv.to_string(),
            row.bound.to_string(),
            row.passed.to_string(),
        ])?;
    }
    let mut lines = Vec::new();
    for (l, mu) in rep.levels.iter().zip(&rep.irs) {
        lines.extend(irs_lines(json!({"level": l.seed, "atoms": l.atoms, "k": k}), mu)?);
    }
    Ok(vec![
        ("fullgroup_irs.csv".into(), t.into_bytes()?),
        ("fullgroup_irs.jsonl".into(), jsonl(lines)?),
    ])
}

pub fn dgen(cfg: &Config, a: DgenArgs, seed_flag: Option<u64>) -> Result<Outputs> {
    let instances = cfg.get("instances", a.instances, 100usize)?;
    let size = cfg.get("size", a.size, 6usize)?;
    let rank = cfg.get("rank", a.rank, 2usize)?;
    let restarts = cfg.get("restarts", a.restarts, DEFAULT_RESTARTS)?;
    let seed = require_seed(cfg, seed_flag)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new(
        "dgen: exhaustive d_gen against the greedy plus 2-swap upper bound on random actions",
        &["instance", "size", "exact", "bound", "equal", "bound_ge_exact"],
    )?;
    for i in 0..instances {
        let x = random_gset(rank, size, &mut rng)?;
        let y = random_gset(rank, size, &mut rng)?;
        let (exact, _) = d_gen_exact(&x, &y).with_context(|| format!("instance {i}"))?;
        let (bound, _) = d_gen_bound(&x, &y, restarts, seed.wrapping_add(i as u64))?;
        t.row([
            i.to_string(),
            size.to_string(),
            exact.to_string(),
            bound.to_string(),
            (bound == exact).to_string(),
            (bound >= exact).to_string(),
        ])?;
    }
    Ok(vec![("dgen.csv".into(), t.into_bytes()?)])
}
