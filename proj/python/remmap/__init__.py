"""Sparse multivariate regression with the remMap penalty."""

from ._remmap import (
    __version__,
    cv_vote,
    df_estimate,
    fit,
    group_shrink_row,
    lasso_update,
    objective,
    ols_refit,
    score_support,
    simulate,
    standardize,
    tune,
)

__all__ = [
    "cv_vote",
    "df_estimate",
    "fit",
    "group_shrink_row",
    "lasso_update",
    "objective",
    "ols_refit",
    "score_support",
    "simulate",
    "standardize",
    "tune",
]
