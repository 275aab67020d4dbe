#![allow(dead_code)]

pub mod closed_forms;
pub mod ml_series;
pub mod rk45;
pub mod scenarios;
