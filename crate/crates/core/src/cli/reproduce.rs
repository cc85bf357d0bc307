//! Figure data: CSV tables plus a gnuplot script per figure.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{Ansatz, Context, Figure, ReproduceArgs, UpperJob, THRESHOLD_TOL};
use crate::error::Result;
use crate::schur::build_schur_basis;
use crate::sep::FullOptions;
use crate::sweep::{entanglement_threshold, lower_point};
use crate::thermal::{asymptotic_xx_bound, asymptotic_xxx_bound, XxzParams};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// One column of lower bounds per parameter set, optionally followed by an
/// asymptote column.
fn lower_table(
    ctx: &Context,
    title: &str,
    models: &[XxzParams],
    ts: &[f64],
    asymptote: Option<&dyn Fn(f64) -> Result<f64>>,
) -> Result<String> {
    let mut header = vec![title.to_string()];
    header.extend(models.iter().map(|p| format!("N={} g={} g_z={} h={}", p.n, p.g, p.g_z, p.h)));
    let mut s = ctx.header(&header);
    s.push('T');
    for p in models {
        let _ = write!(s, ",lower_N{}", p.n);
    }
    if asymptote.is_some() {
        s.push_str(",asymptote");
    }
    s.push('\n');
    let columns: Vec<Vec<f64>> = models
        .par_iter()
        .map(|p| ts.iter().map(|&t| lower_point(p, t).map(|r| r.lower_bound())).collect())
        .collect::<Result<_>>()?;
    for (i, &t) in ts.iter().enumerate() {
        let _ = write!(s, "{t}");
        for c in &columns {
            let _ = write!(s, ",{}", c[i]);
        }
        if let Some(f) = asymptote {
            let _ = write!(s, ",{}", f(t)?);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Full-ansatz upper bounds at a few temperatures, with the matching lower bound.
fn upper_table(ctx: &Context, params: &XxzParams, ts: &[f64]) -> Result<String> {
    let basis = build_schur_basis(params.n, ctx.n_max)?;
    let mut s = ctx.header(&[
        format!("N={} g={} g_z={} h={}", params.n, params.g, params.g_z, params.h),
        format!("full ansatz, seed={}", ctx.seed),
    ]);
    s.push_str("T,lower_bound,t_bsa,gap,termination\n");
    for &t in ts {
        let job = UpperJob {
            params: *params,
            temperature: t,
            ansatz: Ansatz::Full,
            full: FullOptions { seed: ctx.seed, ..FullOptions::default() },
            theta_points: 32,
            polish: true,
        };
        let o = super::run_upper(&job, ctx.n_max, Some(&basis))?;
        let _ = writeln!(
            s,
            "{t},{},{},{},{:?}",
            o.lower.lower_bound,
            o.report.t_bsa,
            o.report.t_bsa - o.lower.lower_bound,
            o.report.termination
        );
    }
    Ok(s)
}

fn gnuplot(name: &str, title: &str, lower_file: &str, models: usize, asymptote: bool, upper_file: Option<&str>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 800,560");
    let _ = writeln!(s, "set output '{name}.png'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 'T'");
    let _ = writeln!(s, "set ylabel 't'");
    let _ = writeln!(s, "set yrange [0:1.05]");
    let mut plots: Vec<String> = (0..models)
        .map(|i| format!("'{lower_file}' using 1:{} with lines", i + 2))
        .collect();
    if asymptote {
        plots.push(format!("'{lower_file}' using 1:{} with lines dashtype 2", models + 2));
    }
    if let Some(u) = upper_file {
        plots.push(format!("'{u}' using 1:3 with points pointtype 7"));
    }
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn cmd_reproduce(ctx: &Context, a: &ReproduceArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let dir = a.out_dir.as_path();
    let (lower_pts, upper_pts) = if a.quick { (40, 4) } else { (200, 12) };
    match a.figure {
        Figure::Fig3 => {
            let models: Vec<XxzParams> = (2..=8).map(|n| XxzParams::xxx(1.0, n)).collect::<Result<_>>()?;
            let ts = logspace(0.01, 2.0, lower_pts);
            let f = |t: f64| asymptotic_xxx_bound(1.0, t);
            write(dir, "fig3_lower.csv", &lower_table(ctx, "XXX lower bounds, g=1", &models, &ts, Some(&f))?)?;
            let upper_ts = linspace(0.05, 1.2, if a.quick { 4 } else { 20 });
            write(dir, "fig3_upper_N3.csv", &upper_table(ctx, &models[1], &upper_ts)?)?;
            write(
                dir,
                "fig3.gp",
                &gnuplot("fig3", "XXX: lower bounds N=2..8, upper bound N=3", "fig3_lower.csv", models.len(), true, Some("fig3_upper_N3.csv")),
            )?;
        }
        Figure::Fig4a => {
            let models = vec![XxzParams::new(-1.0, 0.0, 1.0, 8)?, XxzParams::new(-1.0, 0.0, 1.0, 200)?];
            let ts = logspace(0.005, 0.4, lower_pts);
            write(dir, "fig4a_lower.csv", &lower_table(ctx, "ferromagnetic XX, h=1", &models, &ts, None)?)?;
            write(dir, "fig4a_upper_N8.csv", &upper_table(ctx, &models[0], &linspace(0.02, 0.3, upper_pts))?)?;
            write(
                dir,
                "fig4a.gp",
                &gnuplot("fig4a", "ferromagnetic XX at h=1", "fig4a_lower.csv", models.len(), false, Some("fig4a_upper_N8.csv")),
            )?;
        }
        Figure::Fig4b => {
            let models = vec![
                XxzParams::xx(1.0, 0.0, 8)?,
                XxzParams::xx(1.0, 0.0, 200)?,
                XxzParams::xx(1.0, 0.0, 2000)?,
            ];
            let ts = logspace(0.005, 0.7, lower_pts);
            let f = |t: f64| asymptotic_xx_bound(t);
            write(dir, "fig4b_lower.csv", &lower_table(ctx, "antiferromagnetic XX, h=0", &models, &ts, Some(&f))?)?;
            write(dir, "fig4b_upper_N8.csv", &upper_table(ctx, &models[0], &linspace(0.02, 0.6, upper_pts))?)?;
            write(
                dir,
                "fig4b.gp",
                &gnuplot("fig4b", "antiferromagnetic XX at h=0", "fig4b_lower.csv", models.len(), true, Some("fig4b_upper_N8.csv")),
            )?;
        }
        Figure::Thresholds => {
            let mut s = ctx.header(&["entanglement thresholds of the lower bound".to_string()]);
            s.push_str("model,N,t_star,left,right\n");
            let ns = [2u32, 4, 8, 50, 100, 200, 1000];
            let jobs: Vec<(&str, XxzParams)> = ns
                .iter()
                .map(|&n| Ok(("xxx", XxzParams::xxx(1.0, n)?)))
                .chain(ns.iter().map(|&n| Ok(("xx", XxzParams::xx(1.0, 0.0, n)?))))
                .collect::<Result<_>>()?;
            let rows: Vec<String> = jobs
                .par_iter()
                .map(|(name, p)| {
                    Ok(match entanglement_threshold(p, 1e-3, 5.0, THRESHOLD_TOL)? {
                        Some(th) => format!("{name},{},{},{},{}", p.n, th.t_star, th.left, th.right),
                        None => format!("{name},{},,,", p.n),
                    })
                })
                .collect::<Result<_>>()?;
            for r in rows {
                s.push_str(&r);
                s.push('\n');
            }
            let _ = writeln!(s, "# large-N limits: xxx 1, xx 0.5");
            write(dir, "thresholds.csv", &s)?;
            write(
                dir,
                "thresholds.gp",
                "set terminal pngcairo size 800,560\nset output 'thresholds.png'\nset datafile separator ','\n\
                 set logscale x\nset xlabel 'N'\nset ylabel 'T*'\n\
                 plot 'thresholds.csv' using 2:(strcol(1) eq 'xxx' ? $3 : 1/0) title 'xxx' with linespoints, \\\n     \
                 'thresholds.csv' using 2:(strcol(1) eq 'xx' ? $3 : 1/0) title 'xx' with linespoints\n",
            )?;
        }
    }
    Ok(())
}
