pub struct Ty1;
pub struct Ty2;
fn f1() -> Ty1 { Ty1 }
fn f2() -> Ty2 { Ty2 }
fn f3<T>(_x: T) {}
fn f4<T>(x: T) -> Vec<T> { vec![x] }
