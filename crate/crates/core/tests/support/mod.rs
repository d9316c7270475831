#![allow(dead_code)]

pub mod naive;
pub mod random_tasks;
