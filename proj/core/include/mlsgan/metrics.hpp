#pragma once

#include <string>
#include <vector>

namespace mlsgan {

using Confusion = std::vector<std::vector<long long>>;  // rows = true class

Confusion make_confusion(int k);
void count_prediction(Confusion& confusion, int true_class, int predicted);
long long confusion_total(const Confusion& confusion);

/// Multi-class accuracy: trace / total.
double mca(const Confusion& confusion);

/// Mean per-class accuracy: average of per-class recalls. Classes absent
/// from the test set (empty rows) are skipped with a warning on stderr.
double mpca(const Confusion& confusion);

struct EpochRow {
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double mca = 0.0;
    double mpca = 0.0;
};

struct MetricsReport {
    Confusion confusion;
    double mca = 0.0;
    double mpca = 0.0;
    std::vector<EpochRow> history;  // one row per trained epoch
};

/// Per-epoch CSV with the fixed column set epoch,d_loss,g_loss,mca,mpca.
std::string history_csv(const std::vector<EpochRow>& history);

/// Human-readable final report including the confusion matrix.
std::string render_report(const MetricsReport& report);

}  // namespace mlsgan
