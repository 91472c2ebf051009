#![allow(dead_code)]

pub mod deviation;
pub mod mpc;
pub mod rs_words;
pub mod sdf;
pub mod sweep;
