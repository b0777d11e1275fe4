#![allow(dead_code)]
pub mod vertex;
