//! Personalized 1-lag forecasting of multivariate EMA series with graph
//! neural networks: similarity-based graph construction, four forecaster
//! families trained with a small reverse-mode autodiff engine, and an
//! experiment harness producing grid reports and boxplot data.

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod experiments;
pub mod graphs;
pub mod models;
pub mod seed;
pub mod training;
