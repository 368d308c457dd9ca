//! Shared fixtures for the benchmarks.

use ruinsim::dependence::{DependencePlan, PairCopula};
use ruinsim::processes::RiskModel;
use ruinsim::TailModel;

/// Pareto claims with mean 1 and tail index 2.5.
pub fn claims() -> TailModel {
    TailModel::pareto_with_mean(2.5, 1.0).expect("valid law")
}

pub fn arrivals() -> TailModel {
    TailModel::exponential(1.0).expect("valid law")
}

pub fn na_plan() -> DependencePlan {
    DependencePlan::gaussian_na(-0.2, 5).expect("valid plan")
}

/// Independent sequences with NA claims, premium rate 1.2.
pub fn case1_na() -> RiskModel {
    RiskModel::case1(claims(), arrivals(), 1.2, na_plan(), DependencePlan::iid()).expect("valid model")
}

pub fn case1_iid() -> RiskModel {
    RiskModel::case1(claims(), arrivals(), 1.2, DependencePlan::iid(), DependencePlan::iid()).expect("valid model")
}

/// Comonotone claim and inter-arrival time.
pub fn case2_comonotone() -> RiskModel {
    RiskModel::case2(claims(), arrivals(), 1.2, PairCopula::Comonotone).expect("valid model")
}
