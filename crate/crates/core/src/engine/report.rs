//! Rounds CSV and summary files, and recomputation from a logged CSV.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::adversaries::PolicySpec;
use crate::analysis::hindsight::HindsightAccumulator;
use crate::analysis::revenue::{expected_curves, StrategyProfile};
use crate::analysis::swap::SwapAccumulator;
use crate::auction::{AuctionFormat, Family};
use crate::error::{Error, Result};
use crate::quantile::{gradient_on_curve, utility_on_curve, QuantileStrategy};

use super::config::{FeedbackMode, GameConfig};
use super::game::{SummaryReport, Trajectory};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn rounds_header(n: usize, k: usize, mode: FeedbackMode) -> Vec<String> {
    let mut h: Vec<String> = ["round", "format", "revenue_cond", "revenue_aux", "identity_lhs", "identity_rhs"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 1..=n {
        h.extend((1..=k + 1).map(|j| format!("pi_{i}_{j}")));
        h.push(format!("graddot_{i}"));
    }
    if mode == FeedbackMode::Realized {
        h.push("revenue_realized".into());
        h.extend((1..=n).map(|i| format!("bid_{i}")));
    }
    h
}

pub fn write_rounds_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let c = &traj.config;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(rounds_header(c.n(), c.k, c.feedback_mode))?;
    for r in &traj.records {
        let id = r.identity.as_ref();
        let mut row = vec![
            r.round.to_string(),
            r.format.clone(),
            r.revenue_cond.to_string(),
            opt(id.map(|i| i.revenue_aux)),
            opt(id.map(|i| i.lhs)),
            opt(id.map(|i| i.rhs)),
        ];
        for (i, pi) in r.strategies.iter().enumerate() {
            row.extend(pi.iter().map(|x| x.to_string()));
            row.push(opt(id.map(|x| x.graddots[i])));
        }
        if let Some(real) = &r.realized {
            row.push(real.revenue.to_string());
            row.extend(real.bids.iter().map(|b| b.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed CSV row keyed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRound {
    pub round: u64,
    pub format: String,
    pub revenue_cond: f64,
    pub revenue_aux: Option<f64>,
    pub identity: Option<(f64, f64)>,
    pub strategies: Vec<Vec<f64>>,
    pub revenue_realized: Option<f64>,
    pub bids: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundsTable {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<CsvRound>,
}

fn parse_f64(s: &str, what: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("line {line}: column {what}: {s:?} is not a number")))
}

fn parse_opt(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what, line).map(Some)
    }
}

pub fn read_rounds_csv<R: Read>(input: R) -> Result<RoundsTable> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let col = |name: &str| -> Result<usize> {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("rounds CSV lacks column {name}")))
    };
    let n = (1..).take_while(|i| header.contains(&format!("graddot_{i}"))).count();
    let k = (1..).take_while(|j| header.contains(&format!("pi_1_{j}"))).count().saturating_sub(1);
    if n == 0 || k == 0 {
        return Err(Error::Config("rounds CSV has no strategy columns".into()));
    }
    let (c_round, c_format, c_cond) = (col("round")?, col("format")?, col("revenue_cond")?);
    let (c_aux, c_lhs, c_rhs) = (col("revenue_aux")?, col("identity_lhs")?, col("identity_rhs")?);
    let pi_cols: Vec<Vec<usize>> = (1..=n)
        .map(|i| (1..=k + 1).map(|j| col(&format!("pi_{i}_{j}"))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let realized_col = header.iter().position(|h| h == "revenue_realized");
    let bid_cols: Option<Vec<usize>> = realized_col.map(|_| (1..=n).map(|i| col(&format!("bid_{i}"))).collect::<Result<_>>()).transpose()?;
    let mut rows = Vec::new();
    for (index, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = index + 2;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let lhs = parse_opt(get(c_lhs), "identity_lhs", line)?;
        let rhs = parse_opt(get(c_rhs), "identity_rhs", line)?;
        rows.push(CsvRound {
            round: get(c_round).parse().map_err(|_| Error::Config(format!("line {line}: bad round index")))?,
            format: get(c_format).to_string(),
            revenue_cond: parse_f64(get(c_cond), "revenue_cond", line)?,
            revenue_aux: parse_opt(get(c_aux), "revenue_aux", line)?,
            identity: lhs.zip(rhs),
            strategies: pi_cols
                .iter()
                .map(|cols| cols.iter().map(|&c| parse_f64(get(c), "pi", line)).collect::<Result<_>>())
                .collect::<Result<_>>()?,
            revenue_realized: realized_col.map(|c| parse_f64(get(c), "revenue_realized", line)).transpose()?,
            bids: bid_cols
                .as_ref()
                .map(|cols| {
                    cols.iter()
                        .map(|&c| get(c).parse().map_err(|_| Error::Config(format!("line {line}: bad bid"))))
                        .collect::<Result<_>>()
                })
                .transpose()?,
        });
    }
    Ok(RoundsTable { n, k, rows })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:?}"))
}

/// `key = value` lines.
pub fn write_summary<W: Write>(s: &SummaryReport, mut out: W) -> Result<()> {
    let mut lines = vec![
        format!("total_revenue = {:?}", s.total_revenue),
        format!("mye_per_round = {}", fmt_opt(s.mye_per_round)),
        format!("mye_total = {}", fmt_opt(s.mye_total())),
        format!("slack = {}", fmt_opt(s.slack())),
    ];
    for (i, r) in s.regret.iter().enumerate() {
        lines.push(format!("regret_bidder_{} = {:?}", i + 1, r.regret));
    }
    for (i, r) in s.swap.iter().enumerate() {
        lines.push(format!("swap_regret_bidder_{} = {:?}", i + 1, r.swap_regret));
    }
    lines.push(format!("seed = {}", s.seed));
    lines.push(format!("mode = \"{}\"", s.mode.name()));
    lines.push(format!("rounds = {}", s.rounds));
    lines.push(format!("total_conditional_revenue = {:?}", s.total_conditional_revenue));
    lines.push(format!("max_identity_diff = {:?}", s.max_identity_diff));
    for (i, r) in s.regret.iter().enumerate() {
        lines.push(format!("hindsight_gap_bidder_{} = {:?}", i + 1, r.agreement_gap));
    }
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn parse_summary(text: &str) -> Result<BTreeMap<String, String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (k, v) = l.split_once('=').ok_or_else(|| Error::Config(format!("summary line {}: missing '='", i + 1)))?;
            Ok((k.trim().to_string(), v.trim().trim_matches('"').to_string()))
        })
        .collect()
}

/// Rebuilds a logged format from its digest; tables need the static config format.
pub fn format_from_digest(digest: &str, n: usize, k: usize, config: Option<&GameConfig>) -> Result<AuctionFormat> {
    if let Some((name, reserve)) = digest.split_once("@r") {
        let family = [Family::FirstPrice, Family::SecondPrice, Family::AllPay, Family::PostedPrice]
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown format family {name:?}")))?;
        let reserve = reserve.parse().map_err(|_| Error::Config(format!("bad reserve in {digest:?}")))?;
        return AuctionFormat::standard(family, n, k, reserve);
    }
    if let Some(PolicySpec::Static { format }) = config.map(|c| &c.auctioneer) {
        let f = AuctionFormat::from_spec(format, n, k)?;
        if f.digest() == digest {
            return Ok(f);
        }
    }
    Err(Error::Config(format!("format {digest:?} cannot be rebuilt from the log; pass the static config that produced it")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recomputed {
    pub rounds: u64,
    pub total_conditional_revenue: f64,
    pub total_realized_revenue: Option<f64>,
    pub max_identity_diff: f64,
    /// Per bidder `(regret, swap regret)` when a config was supplied.
    pub regrets: Option<Vec<(f64, f64)>>,
}

/// Totals from the CSV alone, plus per-bidder regrets when the producing config is known.
pub fn recompute(table: &RoundsTable, config: Option<&GameConfig>) -> Result<Recomputed> {
    let total_conditional_revenue = table.rows.iter().map(|r| r.revenue_cond).sum();
    let total_realized_revenue = table.rows.iter().map(|r| r.revenue_realized).sum();
    let max_identity_diff = table
        .rows
        .iter()
        .filter_map(|r| r.identity)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    let regrets = match config {
        None => None,
        Some(c) => {
            if c.n() != table.n || c.k != table.k {
                return Err(Error::Config(format!(
                    "config has n = {}, K = {} but the CSV has n = {}, K = {}",
                    c.n(),
                    c.k,
                    table.n,
                    table.k
                )));
            }
            let dists = c.distributions()?;
            let mut hind: Vec<HindsightAccumulator> = (0..table.n).map(|_| HindsightAccumulator::new(table.k + 1)).collect();
            let mut swap: Vec<SwapAccumulator> = (0..table.n).map(|_| SwapAccumulator::new(table.k + 1)).collect();
            for row in &table.rows {
                let format = format_from_digest(&row.format, table.n, table.k, Some(c))?;
                let profile = StrategyProfile::new(row.strategies.iter().map(|w| QuantileStrategy::new(w.clone())).collect::<Result<_>>()?)?;
                let curves = match &row.bids {
                    None => expected_curves(&format, &profile)?,
                    Some(bids) => (0..table.n)
                        .map(|i| {
                            let opp: Vec<usize> = bids.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &b)| b).collect();
                            format.own_bid_curve(i, &opp)
                        })
                        .collect::<Result<_>>()?,
                };
                for i in 0..table.n {
                    let pi = profile.get(i);
                    hind[i].add_curve(&curves[i], utility_on_curve(pi, &dists[i], &curves[i]));
                    swap[i].add(pi.weights(), &gradient_on_curve(pi, &dists[i], &curves[i]))?;
                }
            }
            Some(
                hind.iter()
                    .zip(&swap)
                    .zip(&dists)
                    .map(|((h, s), d)| Ok((h.report_with(d, 0)?.regret, s.report().swap_regret)))
                    .collect::<Result<_>>()?,
            )
        }
    };
    Ok(Recomputed {
        rounds: table.rows.len() as u64,
        total_conditional_revenue,
        total_realized_revenue,
        max_identity_diff,
        regrets,
    })
}
