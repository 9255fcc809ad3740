#![cfg_attr(not(any(feature = "std", test)), no_std)]
extern crate alloc;
pub fn p1(x: f64) -> f64 { x.sin() }
pub fn p2(x: f64) -> f64 { x.sqrt() }
pub fn p3(x: f64) -> f64 { x.exp() }
pub fn p4(x: f64) -> f64 { x.powi(2) }
pub fn p5(x: f64, y: f64) -> f64 { x.hypot(y) }
