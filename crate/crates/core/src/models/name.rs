//! Parsing and formatting of model names in the expert-table style, e.g.
//! `ARIMA (0,1,1)(1,0,0)_s NOINT`, `Log ARIMA (1,0,0)`, `Linear Trend AR2`,
//! `Holt Winter`, `Random`.

use super::{Family, ModelSpec, Order, SeasonalOrder};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedName {
    pub family: Family,
    pub order: Order,
    pub seasonal: SeasonalOrder,
    pub intercept: bool,
    pub log: bool,
}

fn triple(text: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three orders in ({text})"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad order {s:?}"));
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

pub fn parse(name: &str) -> Result<ParsedName, String> {
    let mut rest = name.trim();
    let mut log = false;
    if let Some(r) = rest.strip_prefix("Log") {
        log = true;
        rest = r.trim_start();
    }
    let mut intercept = true;
    if let Some(r) = rest.strip_suffix("NOINT") {
        intercept = false;
        rest = r.trim_end();
    }

    let plain = |family| ParsedName {
        family,
        order: Order::default(),
        seasonal: SeasonalOrder::default(),
        intercept,
        log,
    };
    match rest {
        "Holt" => return Ok(plain(Family::Holt)),
        "Holt Winter" | "Holt Winters" | "Holt-Winters" => return Ok(plain(Family::HoltWinters)),
        "Linear Exponential" => return Ok(plain(Family::LinearExponential)),
        "Random" | "Random Walk" => return Ok(plain(Family::RandomWalk)),
        _ => {}
    }
    if let Some(k) = rest.strip_prefix("Linear Trend AR") {
        let k: usize = k.trim().parse().map_err(|_| format!("bad AR order in {name:?}"))?;
        return Ok(ParsedName {
            family: Family::LinearTrendAr,
            order: Order { p: k, d: 0, q: 0 },
            ..plain(Family::LinearTrendAr)
        });
    }

    let rest = rest.strip_prefix("ARIMA").unwrap_or(rest).trim();
    let (body, seasonal_marker) = match rest.strip_suffix("_s") {
        Some(b) => (b.trim_end(), true),
        None => (rest, false),
    };
    let mut groups = Vec::new();
    let mut cursor = body;
    while !cursor.is_empty() {
        let open = cursor
            .strip_prefix('(')
            .ok_or_else(|| format!("unexpected text {cursor:?} in {name:?}"))?;
        let close = open.find(')').ok_or_else(|| format!("unbalanced parenthesis in {name:?}"))?;
        groups.push(triple(&open[..close])?);
        cursor = open[close + 1..].trim_start();
    }
    let (order, seasonal) = match (groups.as_slice(), seasonal_marker) {
        ([a], false) => (*a, (0, 0, 0)),
        ([a], true) => ((0, 0, 0), *a),
        ([a, b], true) => (*a, *b),
        _ => return Err(format!("unrecognised model name {name:?}")),
    };
    Ok(ParsedName {
        family: Family::Arima,
        order: Order {
            p: order.0,
            d: order.1,
            q: order.2,
        },
        seasonal: SeasonalOrder {
            p: seasonal.0,
            d: seasonal.1,
            q: seasonal.2,
            s: 0,
        },
        intercept,
        log,
    })
}

/// Canonical name of a spec; [`parse`] inverts it.
pub fn format(spec: &ModelSpec) -> String {
    let mut out = String::new();
    if spec.log_transform {
        out.push_str("Log ");
    }
    let o = spec.orders;
    let so = spec.seasonal_orders;
    match spec.family {
        Family::Holt => out.push_str("Holt"),
        Family::HoltWinters => out.push_str("Holt Winter"),
        Family::LinearExponential => out.push_str("Linear Exponential"),
        Family::RandomWalk => out.push_str("Random"),
        Family::LinearTrendAr => out.push_str(&format!("Linear Trend AR{}", o.p)),
        Family::Arima => {
            out.push_str("ARIMA ");
            let has_plain = o != Order::default();
            if has_plain || so.is_zero() {
                out.push_str(&format!("({},{},{})", o.p, o.d, o.q));
            }
            if !so.is_zero() {
                out.push_str(&format!("({},{},{})_s", so.p, so.d, so.q));
            }
        }
    }
    if !spec.intercept {
        out.push_str(" NOINT");
    }
    out
}
