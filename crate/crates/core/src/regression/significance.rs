use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::panel::CityCode;

/// Per-factor p-values and adjusted R² of one model fitted to one city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityPValues {
    pub city: CityCode,
    pub model: Model,
    /// `(factor label, p-value)` in a fixed factor order.
    pub p_values: Vec<(String, f64)>,
    pub adjusted_r2: f64,
}

/// Counts of p-values at or below the threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    /// Significant factors per city, in `SignificanceTable::cities` order.
    pub per_city: Vec<usize>,
    /// Significant cities per factor, in `SignificanceTable::factors` order.
    pub per_factor: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTable {
    pub threshold: f64,
    pub cities: Vec<CityCode>,
    pub factors: Vec<String>,
    /// `[factor][city]`.
    pub glm_p: Vec<Vec<f64>>,
    pub gam_p: Vec<Vec<f64>>,
    pub glm_adjusted_r2: Vec<f64>,
    pub gam_adjusted_r2: Vec<f64>,
    pub glm: Tallies,
    pub gam: Tallies,
}

impl SignificanceTable {
    pub fn p_values(&self, model: Model) -> &[Vec<f64>] {
        match model {
            Model::Glm => &self.glm_p,
            Model::Gam => &self.gam_p,
        }
    }

    pub fn tallies(&self, model: Model) -> &Tallies {
        match model {
            Model::Glm => &self.glm,
            Model::Gam => &self.gam,
        }
    }

    pub fn p_value(&self, model: Model, factor: &str, city: &CityCode) -> Option<f64> {
        let f = self.factors.iter().position(|x| x == factor)?;
        let c = self.cities.iter().position(|x| x == city)?;
        Some(self.p_values(model)[f][c])
    }
}

fn tally(p: &[Vec<f64>], threshold: f64) -> Tallies {
    let n_cities = p.first().map_or(0, |r| r.len());
    Tallies {
        per_city: (0..n_cities)
            .map(|c| p.iter().filter(|row| row[c] <= threshold).count())
            .collect(),
        per_factor: p.iter().map(|row| row.iter().filter(|v| **v <= threshold).count()).collect(),
    }
}

/// Cross-city p-value table with significance counts (`p <= threshold`).
///
/// Every city must appear once under each model with the same factor list.
pub fn significance_summary(fits: &[CityPValues], threshold: f64) -> Result<SignificanceTable> {
    let mut cities: Vec<CityCode> = fits.iter().map(|f| f.city.clone()).collect();
    cities.sort();
    cities.dedup();
    if cities.is_empty() {
        return Err(Error::Precondition("no fitted cities".into()));
    }
    let factors: Vec<String> = fits[0].p_values.iter().map(|(f, _)| f.clone()).collect();
    let find = |city: &CityCode, model: Model| -> Result<&CityPValues> {
        let mut it = fits.iter().filter(|f| &f.city == city && f.model == model);
        let found = it
            .next()
            .ok_or_else(|| Error::Validation(format!("no {model} fit for {city}")))?;
        if it.next().is_some() {
            return Err(Error::Validation(format!("duplicate {model} fit for {city}")));
        }
        let names: Vec<&String> = found.p_values.iter().map(|(f, _)| f).collect();
        if names.len() != factors.len() || names.iter().zip(&factors).any(|(a, b)| *a != b) {
            return Err(Error::Validation(format!("{model} fit for {city} has a different factor list")));
        }
        Ok(found)
    };
    let mut glm_p = vec![Vec::with_capacity(cities.len()); factors.len()];
    let mut gam_p = glm_p.clone();
    let mut glm_adjusted_r2 = Vec::new();
    let mut gam_adjusted_r2 = Vec::new();
    for city in &cities {
        let glm = find(city, Model::Glm)?;
        let gam = find(city, Model::Gam)?;
        for (k, ((_, a), (_, b))) in glm.p_values.iter().zip(&gam.p_values).enumerate() {
            glm_p[k].push(*a);
            gam_p[k].push(*b);
        }
        glm_adjusted_r2.push(glm.adjusted_r2);
        gam_adjusted_r2.push(gam.adjusted_r2);
    }
    Ok(SignificanceTable {
        threshold,
        glm: tally(&glm_p, threshold),
        gam: tally(&gam_p, threshold),
        cities,
        factors,
        glm_p,
        gam_p,
        glm_adjusted_r2,
        gam_adjusted_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(city: &str, model: Model, p: &[f64]) -> CityPValues {
        CityPValues {
            city: CityCode::new(city).unwrap(),
            model,
            p_values: p.iter().enumerate().map(|(i, v)| (format!("f{i}"), *v)).collect(),
            adjusted_r2: 0.0,
        }
    }

    #[test]
    fn counts_and_boundary() {
        let fits = vec![
            entry("BBB", Model::Glm, &[0.1, 0.5]),
            entry("BBB", Model::Gam, &[0.01, 0.2]),
            entry("AAA", Model::Glm, &[0.9, 0.05]),
            entry("AAA", Model::Gam, &[0.09, 0.1]),
        ];
        let t = significance_summary(&fits, 0.10).unwrap();
        assert_eq!(t.cities[0].as_str(), "AAA");
        assert_eq!(t.glm.per_city, vec![1, 1]);
        assert_eq!(t.gam.per_city, vec![2, 1]);
        assert_eq!(t.gam.per_factor, vec![2, 1]);
        let zero = significance_summary(&fits, 0.0).unwrap();
        assert!(zero.gam.per_city.iter().chain(&zero.glm.per_city).all(|c| *c == 0));
    }

    #[test]
    fn missing_model_is_an_error() {
        let fits = vec![entry("AAA", Model::Glm, &[0.1])];
        assert!(significance_summary(&fits, 0.1).is_err());
        assert!(significance_summary(&[], 0.1).is_err());
    }
}
