//! Scenario dispatch.

use rayon::prelude::*;

use magnon_echo::echo::{
    echo_coherent, echo_incoherent, echo_multi_exact_z, echo_multi_truncated, string_amplitude_truncated,
};
use magnon_echo::harper::{
    echo_harper_qdp, reverse_echo_series, xy_echo_from_overlap, xy_overlap_series, HarperColumns,
};
use magnon_echo::oracle::{Model, Oracle};
use magnon_echo::{EchoAxis, EchoSeries, Epoch, Error, QdpEvent, QdpKind, QdpSequence, C64};

use crate::config::{CliError, CurveConfig, OracleModel, Quantity, RunConfig, Scenario};

/// One block of output rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Series { label: String, series: EchoSeries },
    /// `(x, n, G̃[x][1] after n kicks)`
    Dump { label: String, description: String, rows: Vec<(usize, usize, C64)> },
}

pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<Block>, CliError> {
    cfg.curves.iter().map(run_curve).collect()
}

fn runtime(curve: &CurveConfig, err: Error) -> CliError {
    let label = if curve.label.is_empty() {
        String::new()
    } else {
        format!(" [{}]", curve.label)
    };
    CliError::Runtime(format!("{}{label}: {err}", curve.scenario.name()))
}

fn run_curve(curve: &CurveConfig) -> Result<Block, CliError> {
    let wrap = |r: Result<EchoSeries, Error>| {
        r.map(|series| Block::Series {
            label: curve.label.clone(),
            series,
        })
        .map_err(|e| runtime(curve, e))
    };
    match curve.scenario {
        Scenario::EchoSingle | Scenario::EchoCoherent => wrap(single(curve)),
        Scenario::EchoMulti => wrap(multi(curve)),
        Scenario::HarperGreen => green_dump(curve).map_err(|e| runtime(curve, e)),
        Scenario::HarperEcho => wrap(harper_echo(curve)),
        Scenario::HarperEchoQdp => wrap(harper_qdp(curve)),
        Scenario::HarperReverse => wrap(harper_reverse(curve)),
        Scenario::Oracle => wrap(oracle(curve)),
    }
}

fn sweep(curve: &CurveConfig) -> (EchoAxis, Vec<f64>) {
    let grid = curve.sweep.as_ref().expect("validated sweep");
    (grid.axis, grid.values.clone())
}

/// Evaluates `f` on every grid point in parallel, keeping grid order.
fn series_from<F>(axis: EchoAxis, points: &[f64], description: String, f: F) -> Result<EchoSeries, Error>
where
    F: Fn(f64) -> Result<f64, Error> + Sync,
{
    let values: Vec<f64> = points.par_iter().map(|&x| f(x)).collect::<Result<_, _>>()?;
    let mut series = EchoSeries::new(axis, description);
    for (x, v) in points.iter().zip(values) {
        series.push(*x, v);
    }
    Ok(series)
}

fn single(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let chain = curve.chain().map_err(|e| Error::Usage(e.to_string()))?;
    let (axis, points) = sweep(curve);
    let coherent = curve.scenario == Scenario::EchoCoherent;
    let kind = if coherent {
        QdpKind::Coherent(curve.gate)
    } else {
        QdpKind::Incoherent(curve.channel.clone())
    };
    let description = format!("{} {} {}", curve.scenario.name(), kind.describe(), curve.state.describe());
    series_from(axis, &points, description, |x| {
        let (m, t0) = match axis {
            EchoAxis::M => (x as i64, curve.t0),
            _ => (curve.m, x),
        };
        if coherent {
            echo_coherent(&curve.state, &chain, m, t0, &curve.gate)
        } else {
            let event = QdpEvent::new(m, Epoch::Time(t0), kind.clone())?;
            echo_incoherent(&curve.state, &chain, &event)
        }
    })
}

fn count_at(x: f64) -> usize {
    x as usize
}

fn multi(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let chain = curve.chain().map_err(|e| Error::Usage(e.to_string()))?;
    let (axis, points) = sweep(curve);
    let kind = QdpKind::Incoherent(curve.channel.clone());
    if curve.quantity == Quantity::String {
        let order = curve.order.unwrap_or(curve.site_list.len() + 1);
        let description = format!("sigma-z string real part order={order} sites={:?}", curve.site_list);
        return series_from(axis, &points, description, |t0| {
            let intervals = vec![t0; curve.site_list.len()];
            Ok(string_amplitude_truncated(&chain, &curve.state, &curve.site_list, &intervals, order)?.re)
        });
    }
    let run = |spacing: f64, count: usize| -> Result<EchoSeries, Error> {
        if count == 0 || count > curve.site_list.len() {
            return Err(Error::Usage(format!(
                "n={count} needs between 1 and {} QDP sites",
                curve.site_list.len()
            )));
        }
        let seq = QdpSequence::new(spacing, curve.site_list[..count].to_vec(), kind.clone())?;
        match curve.order {
            Some(order) => echo_multi_truncated(&curve.state, &chain, &seq, order),
            None => echo_multi_exact_z(&curve.state, &chain, &seq),
        }
    };
    let method = curve.order.map_or("exact".to_string(), |o| format!("order={o}"));
    let description = format!("multi {method} {} {}", kind.describe(), curve.state.describe());
    match axis {
        EchoAxis::N => {
            let max = points.iter().copied().fold(0.0, f64::max);
            let full = run(curve.t0, count_at(max))?;
            let mut series = EchoSeries::new(axis, description);
            for &x in &points {
                let n = count_at(x);
                if n == 0 {
                    return Err(Error::Usage("the QDP count starts at 1".into()));
                }
                series.push(x, full.samples[n - 1].1);
            }
            Ok(series)
        }
        _ => series_from(axis, &points, description, |spacing| {
            let s = run(spacing, curve.n)?;
            Ok(s.samples[curve.n - 1].1)
        }),
    }
}

fn green_dump(curve: &CurveConfig) -> Result<Block, Error> {
    let params = curve.harper(curve.tau).map_err(|e| Error::Usage(e.to_string()))?;
    let cols = HarperColumns::new(&params, 1)?.collect(curve.n);
    let rows = cols
        .iter()
        .enumerate()
        .flat_map(|(n, col)| col.iter().enumerate().map(move |(x, &a)| (x + 1, n, a)))
        .collect();
    Ok(Block::Dump {
        label: curve.label.clone(),
        description: format!("harper green g={} tau={} eta={} N={}", params.g, params.tau, params.eta, params.sites),
        rows,
    })
}

fn harper_echo(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let params = curve.harper(curve.tau).map_err(|e| Error::Usage(e.to_string()))?;
    if curve.state.is_entangled() {
        return Err(Error::Usage("harper-echo takes the unentangled state".into()));
    }
    let (axis, points) = sweep(curve);
    let max = count_at(points.iter().copied().fold(0.0, f64::max));
    let overlaps = xy_overlap_series(&params, max)?;
    let u = curve.state.alpha().norm_sqr();
    let mut series = EchoSeries::new(
        axis,
        format!("kicked vs xy g={} tau={} averaged={}", params.g, params.tau, curve.averaged),
    );
    for &x in &points {
        series.push(x, xy_echo_from_overlap(overlaps[count_at(x)], u, curve.averaged));
    }
    Ok(series)
}

fn harper_qdp(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let params = curve.harper(curve.tau).map_err(|e| Error::Usage(e.to_string()))?;
    let (axis, points) = sweep(curve);
    let description = format!("harper qdp {} g={} tau={}", curve.channel.describe(), params.g, params.tau);
    series_from(axis, &points, description, |x| {
        let (m, n0) = match axis {
            EchoAxis::M => (x as i64, curve.n),
            _ => (curve.m, count_at(x)),
        };
        echo_harper_qdp(&curve.state, &params, &curve.channel, m, n0)
    })
}

fn harper_reverse(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let fwd = curve.harper(curve.tau).map_err(|e| Error::Usage(e.to_string()))?;
    let bwd = curve
        .harper(curve.tau2.expect("validated tau2"))
        .map_err(|e| Error::Usage(e.to_string()))?;
    let mut series = EchoSeries::new(
        EchoAxis::T,
        format!("reverse kicking g={} tau={} tau2={}", fwd.g, fwd.tau, bwd.tau),
    );
    for (t, l) in reverse_echo_series(&curve.state, &fwd, &bwd, curve.t)? {
        series.push(t, l);
    }
    Ok(series)
}

fn oracle(curve: &CurveConfig) -> Result<EchoSeries, Error> {
    let (axis, points) = sweep(curve);
    let kind = curve.qdp_kind();
    let description = format!("oracle {} {}", kind.describe(), curve.state.describe());
    match curve.model {
        OracleModel::Chain => {
            let chain = curve.chain().map_err(|e| Error::Usage(e.to_string()))?;
            let oracle = Oracle::new(Model::Chain(chain))?;
            if axis == EchoAxis::N {
                return series_from(axis, &points, description, |x| {
                    let count = count_at(x);
                    if count == 0 || count > curve.site_list.len() {
                        return Err(Error::Usage(format!(
                            "n={count} needs between 1 and {} QDP sites",
                            curve.site_list.len()
                        )));
                    }
                    let events = QdpSequence::new(curve.t0, curve.site_list[..count].to_vec(), kind.clone())?.events();
                    oracle.echo(&curve.state, &events, Epoch::Time((count + 1) as f64 * curve.t0))
                });
            }
            series_from(axis, &points, description, |x| {
                let (m, t0) = match axis {
                    EchoAxis::M => (x as i64, curve.t0),
                    _ => (curve.m, x),
                };
                let event = QdpEvent::new(m, Epoch::Time(t0), kind.clone())?;
                oracle.echo(&curve.state, &[event], Epoch::Time(t0 + 1.0))
            })
        }
        OracleModel::Harper => {
            let params = curve.harper(curve.tau).map_err(|e| Error::Usage(e.to_string()))?;
            let oracle = Oracle::new(Model::Harper(params))?;
            if axis == EchoAxis::T0 {
                return Err(Error::Usage("Harper oracle runs sweep the kick count `n` or the site `m`".into()));
            }
            series_from(axis, &points, description, |x| {
                let (m, n0) = match axis {
                    EchoAxis::M => (x as i64, curve.n),
                    _ => (curve.m, count_at(x)),
                };
                let event = QdpEvent::new(m, Epoch::Kicks(n0), kind.clone())?;
                oracle.echo(&curve.state, &[event], Epoch::Kicks(n0 + 1))
            })
        }
    }
}
