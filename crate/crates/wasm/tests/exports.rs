use nlgrad_wasm::{limit_exponent_curve_json, localization_curve_json, symbol_curve_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn vanishing_symbols_approach_one() {
    let v = parse(symbol_curve_json("truncated-fractional", 0.5, 1, &[0.5, 0.05], false, 10.0));
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 2);
    let coarse = curves[0][1].as_array().unwrap();
    let fine = curves[1][1].as_array().unwrap();
    let last = coarse.len() - 1;
    let gap = |c: &Vec<Value>| (1.0 - c[last].as_f64().unwrap()).abs();
    assert!(gap(fine) < gap(coarse));
    assert!((coarse[0].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn diverging_riesz_matches_its_reference() {
    let v = parse(symbol_curve_json("riesz", 0.4, 1, &[3.0], true, 10.0));
    let curve = v["curves"][0][1].as_array().unwrap();
    let reference = v["reference"].as_array().unwrap();
    for (a, b) in curve.iter().zip(reference) {
        let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        assert!((a - b).abs() < 1e-6 * b);
    }
}

#[test]
fn localization_slope_is_near_two() {
    let v = parse(localization_curve_json("truncated-fractional", 0.5, 1, 1024));
    let slope = v["slope"].as_f64().unwrap();
    assert!((1.7..2.3).contains(&slope), "{slope}");
    assert_eq!(v["deltas"].as_array().unwrap().len(), 5);
}

#[test]
fn limit_exponent_extrapolates_to_s() {
    let v = parse(limit_exponent_curve_json("log-corrected", 0.5, -1));
    assert!((v["extrapolated"].as_f64().unwrap() - 0.5).abs() < 0.03);
    assert_eq!(v["analytic"], 0.5);
}

#[test]
fn unknown_family_is_an_error() {
    assert!(limit_exponent_curve_json("gaussian", 0.5, 1).unwrap_err().contains("gaussian"));
    assert!(symbol_curve_json("riesz", 1.5, 1, &[2.0], true, 10.0).is_err());
}
