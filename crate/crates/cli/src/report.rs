//! Report rendering: the stable JSON schema and the plain-text form.

use serde::Serialize;

use exact3::exactness::{BasePoint, Equation, ExactnessReport, FirstIntegral};
use exact3::mu_search::IntegratingFactor;

/// One exactness condition in JSON form.
#[derive(Serialize)]
pub struct ConditionJson {
    pub id: &'static str,
    pub verdict: &'static str,
}

/// One integrating factor in JSON form. `xi` is absent for a user-supplied
/// factor under `verify`.
#[derive(Serialize)]
pub struct FactorJson {
    pub xi: Option<String>,
    pub mu: String,
    pub certificate: &'static str,
}

#[derive(Serialize)]
pub struct FirstIntegralJson {
    pub psi: String,
    pub base: String,
}

/// Top-level JSON report; field order is the published schema order.
#[derive(Serialize)]
pub struct Report {
    pub exact: bool,
    pub conditions: Vec<ConditionJson>,
    pub factors: Vec<FactorJson>,
    pub first_integral: Option<FirstIntegralJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    pub seed: u64,
}

pub fn conditions_json(report: &ExactnessReport) -> Vec<ConditionJson> {
    report
        .conditions
        .iter()
        .map(|c| ConditionJson {
            id: c.id.label(),
            verdict: c.verdict.label(),
        })
        .collect()
}

pub fn factor_json(f: &IntegratingFactor) -> FactorJson {
    FactorJson {
        xi: Some(f.xi.to_string()),
        mu: f.mu.to_string(),
        certificate: f.certificate.label(),
    }
}

pub fn base_string(base: &BasePoint) -> String {
    format!("{},{},{},{}", base.t0, base.y0, base.y10, base.y20)
}

pub fn first_integral_json(fi: &FirstIntegral) -> FirstIntegralJson {
    FirstIntegralJson {
        psi: fi.psi.to_string(),
        base: base_string(&fi.base),
    }
}

// --- plain text ---

pub fn print_equation(title: &str, eq: &Equation) {
    println!("{title}:");
    println!("  F3 = {}", eq.f3());
    println!("  F2 = {}", eq.f2());
    println!("  F1 = {}", eq.f1());
    println!("  F0 = {}", eq.f0());
}

pub fn print_conditions(report: &ExactnessReport) {
    if report.is_exact() {
        println!("exactness: exact");
    } else {
        let failed: Vec<&str> = report.failures().iter().map(|id| id.label()).collect();
        println!("exactness: not exact (condition(s) {} fail)", failed.join(", "));
    }
    for c in &report.conditions {
        println!(
            "  ({:<3}) {:<24} {}",
            c.id.label(),
            c.id.statement(),
            c.verdict.label()
        );
    }
}

pub fn print_factors(factors: &[IntegratingFactor]) {
    if factors.is_empty() {
        println!("no product-form factor found");
        return;
    }
    println!("integrating factors:");
    for f in factors {
        println!(
            "  xi = {:<16} mu = {:<24} [{}]",
            f.xi.to_string(),
            f.mu.to_string(),
            f.certificate.label()
        );
    }
}

pub fn print_first_integral(fi: &FirstIntegral) {
    println!(
        "first integral (base t0={}, y0={}, y'0={}, y''0={}):",
        fi.base.t0, fi.base.y0, fi.base.y10, fi.base.y20
    );
    println!("  Psi = {}", fi.psi);
}
