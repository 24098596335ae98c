use super::CnnError;

/// Dense row-major array of finite doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, CnnError> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(CnnError::ShapeMismatch {
                expected: shape,
                got: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CnnError::NonFinite);
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![0.0; len] }
    }

    /// Stacks face tensors into an `[N×3×28×28]` batch.
    pub fn stack(faces: &[crate::imageprep::FaceTensor]) -> Self {
        let mut data = Vec::with_capacity(faces.len() * crate::imageprep::TENSOR_LEN);
        for f in faces {
            data.extend_from_slice(f.data());
        }
        Self {
            shape: vec![faces.len(), 3, 28, 28],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_len_and_finiteness() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(matches!(Tensor::new(vec![1], vec![f64::NAN]), Err(CnnError::NonFinite)));
        assert_eq!(Tensor::zeros(vec![4, 2]).data().len(), 8);
    }
}
