use std::sync::LazyLock;

use regex::Regex;

use super::Decision;

static SENTENCE_END: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[.!?](?:\s|$)|\n").expect("valid regex"));
static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d+(?:,\d{3})*(?:\.\d+)?)(\s*(?:%|percent\b|units?\b))?").expect("valid regex")
});
static DONATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(give|giving|gives|donate|donating|donation|contribute|contributing|offer|offering|transfer|answer)\b",
    )
    .expect("valid regex")
});
static PUNISH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(punish|punishing|punishment)\b").expect("valid regex"));
static SPEND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(spend|spending)\b").expect("valid regex"));
static BARE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(\d+(?:,\d{3})*(?:\.\d+)?)\s*(%|units?)?\s*\.?\s*$").expect("valid regex")
});
static STRATEGY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)my strategy will be").expect("valid regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Donate,
    Punish,
}

#[derive(Debug, Clone, Copy)]
struct Amount {
    start: usize,
    value: f64,
    percent: bool,
}

fn numbers(sentence: &str) -> Vec<Amount> {
    let bytes = sentence.as_bytes();
    NUMBER
        .captures_iter(sentence)
        .filter_map(|c| {
            let m = c.get(1)?;
            let before = m.start().checked_sub(1).map(|i| bytes[i]);
            let after = bytes.get(m.end()).copied();
            let glued = |b: Option<u8>| b.is_some_and(|b| b == b'_' || b.is_ascii_alphabetic());
            if glued(before) || glued(after) {
                return None;
            }
            let value: f64 = m.as_str().replace(',', "").parse().ok()?;
            let percent = c
                .get(2)
                .is_some_and(|u| u.as_str().trim_start().starts_with(['%', 'p', 'P']));
            Some(Amount {
                start: m.start(),
                value,
                percent,
            })
        })
        .collect()
}

fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut last = 0;
    for m in SENTENCE_END.find_iter(text) {
        out.push(&text[last..m.end()]);
        last = m.end();
    }
    out.push(&text[last..]);
    out
}

/// Associates each number in `sentence` with the nearest keyword before it,
/// provided no other number sits in between.
fn associations(sentence: &str) -> Vec<(Kind, Amount)> {
    let nums = numbers(sentence);
    let mut keywords: Vec<(usize, usize, Kind)> = Vec::new();
    keywords.extend(DONATE.find_iter(sentence).map(|m| (m.start(), m.end(), Kind::Donate)));
    keywords.extend(PUNISH.find_iter(sentence).map(|m| (m.start(), m.end(), Kind::Punish)));
    if PUNISH.is_match(sentence) {
        keywords.extend(SPEND.find_iter(sentence).map(|m| (m.start(), m.end(), Kind::Punish)));
    }
    let mut best: Vec<Option<(usize, Kind)>> = vec![None; nums.len()];
    for &(start, end, kind) in &keywords {
        if let Some(idx) = nums.iter().position(|n| n.start >= end) {
            if best[idx].is_none_or(|(s, _)| start > s) {
                best[idx] = Some((start, kind));
            }
        }
    }
    best.iter()
        .zip(&nums)
        .filter_map(|(b, n)| b.map(|(_, kind)| (kind, *n)))
        .collect()
}

fn to_units(amount: Amount, donor_resources: f64) -> f64 {
    if amount.percent {
        amount.value / 100.0 * donor_resources
    } else {
        amount.value
    }
}

/// Scales `donation` and `spend` down proportionally when together they
/// exceed `resources`. Returns the fitted pair and whether scaling happened.
pub(super) fn fit_to_resources(donation: f64, spend: f64, resources: f64) -> (f64, f64, bool) {
    let resources = resources.max(0.0);
    let total = donation + spend;
    if total <= resources + 1e-12 {
        return (donation.min(resources), spend, false);
    }
    if resources <= 0.0 {
        return (0.0, 0.0, true);
    }
    let scale = resources / total;
    let d = donation * scale;
    let s = (spend * scale).min(resources - d).max(0.0);
    (d, s, true)
}

/// Reads a donation, and a punishment spend when enabled, out of free text.
///
/// Amounts are the first number after a keyword in the same sentence; the
/// last such amount of each kind wins. Percentages are taken of
/// `donor_resources`.
pub fn parse_decision(raw: &str, donor_resources: f64, punishment_enabled: bool) -> Decision {
    let mut donation = None;
    let mut spend = None;
    for sentence in sentences(raw) {
        for (kind, amount) in associations(sentence) {
            let units = to_units(amount, donor_resources);
            match kind {
                Kind::Donate => donation = Some(units),
                Kind::Punish => spend = Some(units),
            }
        }
    }
    if donation.is_none() {
        if let Some(c) = BARE.captures(raw) {
            let value: f64 = c[1].replace(',', "").parse().unwrap_or(0.0);
            let percent = c.get(2).is_some_and(|u| u.as_str() == "%");
            donation = Some(to_units(
                Amount {
                    start: 0,
                    value,
                    percent,
                },
                donor_resources,
            ));
        }
    }
    let parse_failed = donation.is_none();
    let spend = if punishment_enabled { spend.unwrap_or(0.0) } else { 0.0 };
    let (donation, punishment_spend, clamped) =
        fit_to_resources(donation.unwrap_or(0.0), spend, donor_resources);
    Decision {
        donation,
        punishment_spend,
        raw_response: raw.to_string(),
        clamped,
        parse_failed,
    }
}

/// The strategy sentence from an elicitation response: the last line
/// segment starting with "My strategy will be", or the whole trimmed
/// response when that phrase is absent. `None` for empty responses.
pub fn extract_strategy(response: &str) -> Option<String> {
    let text = match STRATEGY.find_iter(response).last() {
        Some(m) => {
            let rest = &response[m.start()..];
            rest.lines().next().unwrap_or(rest).replace('*', "")
        }
        None => response.replace('*', ""),
    };
    let text = text.trim().to_string();
    (!text.is_empty()).then_some(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(raw: &str, res: f64) -> Decision {
        parse_decision(raw, res, false)
    }

    fn p(raw: &str, res: f64) -> Decision {
        parse_decision(raw, res, true)
    }

    #[test]
    fn plain_amounts() {
        assert_eq!(d("Thinking it over, I will give up 25 units.", 74.0).donation, 25.0);
        assert_eq!(d("I donate 50% of my resources", 74.0).donation, 37.0);
        assert_eq!(d("I give 5 units", 10.0).donation, 5.0);
        assert_eq!(d("Answer: 3.5", 10.0).donation, 3.5);
        assert_eq!(d("I will give 1,200 units", 5000.0).donation, 1200.0);
    }

    #[test]
    fn clamping() {
        let x = d("give 120 units", 74.0);
        assert_eq!(x.donation, 74.0);
        assert!(x.clamped);
        let y = p("I give 60 units and punish them by spending 40 units.", 50.0);
        assert!(y.clamped);
        assert!((y.donation - 30.0).abs() < 1e-9);
        assert!((y.punishment_spend - 20.0).abs() < 1e-9);
    }

    #[test]
    fn last_amount_wins_and_names_are_not_numbers() {
        let text = "1_3 donated 60% in round 3. At first I thought I would give 10 units. \
                    On reflection I will give 12 units to 1_3.";
        assert_eq!(d(text, 74.0).donation, 12.0);
        assert_eq!(d("They donated 60% last time, so I give 30%.", 10.0).donation, 3.0);
    }

    #[test]
    fn punishment_amounts() {
        let x = p("I will give 2 units. I will also punish them by spending 3 units.", 10.0);
        assert_eq!((x.donation, x.punishment_spend), (2.0, 3.0));
        let y = p("I give 1 unit and spend 2 units to punish them.", 10.0);
        assert_eq!((y.donation, y.punishment_spend), (1.0, 2.0));
        let z = d("I will give 2 units. I will also punish them by spending 3 units.", 10.0);
        assert_eq!(z.punishment_spend, 0.0);
        let w = p("I give nothing but punish with 4 units.", 10.0);
        assert_eq!(w.punishment_spend, 4.0);
        assert!(w.parse_failed);
    }

    #[test]
    fn fallbacks() {
        assert_eq!(d("7", 10.0).donation, 7.0);
        assert_eq!(d(" 40% ", 10.0).donation, 4.0);
        let x = d("I refuse to say.", 10.0);
        assert_eq!(x.donation, 0.0);
        assert!(x.parse_failed);
        assert_eq!(x.raw_response, "I refuse to say.");
    }

    #[test]
    fn strategy_extraction() {
        assert_eq!(
            extract_strategy("Let me think.\n**My strategy will be to give 50%.**\nDone").unwrap(),
            "My strategy will be to give 50%."
        );
        assert_eq!(
            extract_strategy("My strategy will be A.\nMy strategy will be B.").unwrap(),
            "My strategy will be B."
        );
        assert_eq!(extract_strategy(" Donate half. ").unwrap(), "Donate half.");
        assert_eq!(extract_strategy("   "), None);
    }
}
