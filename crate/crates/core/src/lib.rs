pub mod cauchy;
pub mod cli;
pub mod config;
pub mod ctrw;
pub mod error;
pub mod ibvp;
pub mod kernels;
pub mod quad;
pub mod relaxation;
pub mod specfun;
