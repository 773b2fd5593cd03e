//! Spectral coordinates for Argyres-Douglas theories: catalog data, periods, integral
//! equations, direct ODE/PDE computations and the hyperkahler metric.

pub mod compare;
pub mod error;
pub mod ieq;
pub mod metric;
pub mod ode;
pub mod oper;
pub mod pde;
pub mod periods;
pub mod poly;
pub mod spline;
pub mod theory;

pub use error::{Result, StokesError};
pub use num_complex::Complex64;
pub use periods::PeriodVector;
pub use poly::ComplexPoly;
pub use theory::{BpsState, ChargeVector, DifferentialTuple, Theory, TheoryName};
