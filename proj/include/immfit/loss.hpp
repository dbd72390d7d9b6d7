#ifndef IMMFIT_LOSS_HPP
#define IMMFIT_LOSS_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "immfit/filters.hpp"

namespace immfit {

template <class S>
struct LossValue {
    S total = S(0.0);
    std::vector<S> per_trajectory;
    long steps_counted = 0;
};

// Negative log-likelihood of one measurement sequence under the one-step
// predicted measurement distribution. The first two measurements seed the
// filter and contribute no loss terms.
template <class S>
S trajectory_nll(std::span<const std::array<double, 2>> zs, const FilterModel<S>& model) {
    S nll = S(0.0);
    filter_pass(zs, model, [&](int t, const StepRecord<S>& rec) {
        const Vec<double, 2> z{{zs[static_cast<std::size_t>(t)][0],
                                zs[static_cast<std::size_t>(t)][1]}};
        nll -= gaussian_log_pdf(z, rec.meas_prediction.mean, rec.meas_prediction.cov);
    });
    return nll;
}

using MeasurementSeq = std::vector<std::array<double, 2>>;

// Sum of trajectory NLLs in ascending trajectory order. The fixed reduction
// order keeps repeated evaluations bit-identical.
template <class S>
LossValue<S> dataset_nll(std::span<const MeasurementSeq* const> seqs,
                         const FilterModel<S>& model) {
    if (seqs.empty()) throw DataError("dataset split is empty");
    LossValue<S> loss;
    for (std::size_t index = 0; index < seqs.size(); ++index) {
        const MeasurementSeq& zs = *seqs[index];
        try {
            const S nll = trajectory_nll(
                std::span<const std::array<double, 2>>(zs.data(), zs.size()), model);
            loss.per_trajectory.push_back(nll);
            loss.total += nll;
            loss.steps_counted += static_cast<long>(zs.size()) - 2;
        } catch (const FilterDivergenceError& e) {
            throw FilterDivergenceError(std::string(e.what()) + " in trajectory " +
                                            std::to_string(index),
                                        e.step(), static_cast<int>(index));
        }
    }
    return loss;
}

template <class S>
LossValue<S> dataset_nll(const std::vector<MeasurementSeq>& seqs,
                         const FilterModel<S>& model) {
    std::vector<const MeasurementSeq*> ptrs;
    ptrs.reserve(seqs.size());
    for (const MeasurementSeq& s : seqs) ptrs.push_back(&s);
    return dataset_nll<S>(std::span<const MeasurementSeq* const>(ptrs), model);
}

}  // namespace immfit

#endif  // IMMFIT_LOSS_HPP
