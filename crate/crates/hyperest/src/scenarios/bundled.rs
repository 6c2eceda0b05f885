//! Benchmark scenarios shipped with the crate.

pub const EQ261: &str = include_str!("../../scenarios/eq261.scn");
pub const BOUNCING_BALL_U0: &str = include_str!("../../scenarios/bouncing_ball_u0.scn");
pub const BOUNCING_BALL_U20: &str = include_str!("../../scenarios/bouncing_ball_u20.scn");
pub const MIXED_DATA: &str = include_str!("../../scenarios/mixed_data.scn");

/// All bundled scenarios as `(file name, contents)`.
pub fn all() -> Vec<(&'static str, &'static str)> {
    vec![
        ("eq261.scn", EQ261),
        ("bouncing_ball_u0.scn", BOUNCING_BALL_U0),
        ("bouncing_ball_u20.scn", BOUNCING_BALL_U20),
        ("mixed_data.scn", MIXED_DATA),
    ]
}

/// Look up a bundled scenario by file name.
pub fn get(name: &str) -> Option<&'static str> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, text)| text)
}
