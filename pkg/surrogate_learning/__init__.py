"""Semi-supervised classification by surrogate learning."""
