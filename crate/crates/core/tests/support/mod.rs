#![allow(dead_code)]

pub mod semantics;
