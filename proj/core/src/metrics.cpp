#include "mlsgan/metrics.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "mlsgan/error.hpp"

namespace mlsgan {

Confusion make_confusion(int k) {
    if (k < 1) throw ContractError("make_confusion: k must be >= 1");
    return Confusion(static_cast<std::size_t>(k), std::vector<long long>(static_cast<std::size_t>(k), 0));
}

void count_prediction(Confusion& confusion, int true_class, int predicted) {
    const int k = static_cast<int>(confusion.size());
    if (true_class < 0 || true_class >= k || predicted < 0 || predicted >= k) {
        throw ContractError("count_prediction: class outside [0, " + std::to_string(k) + ")");
    }
    confusion[static_cast<std::size_t>(true_class)][static_cast<std::size_t>(predicted)] += 1;
}

namespace {

void check_square(const Confusion& confusion, const char* op) {
    if (confusion.empty()) throw ContractError(std::string(op) + ": empty confusion matrix");
    for (const auto& row : confusion) {
        if (row.size() != confusion.size()) {
            throw ContractError(std::string(op) + ": confusion matrix is not square");
        }
        for (long long v : row) {
            if (v < 0) throw ContractError(std::string(op) + ": negative count");
        }
    }
}

}  // namespace

long long confusion_total(const Confusion& confusion) {
    long long total = 0;
    for (const auto& row : confusion)
        for (long long v : row) total += v;
    return total;
}

double mca(const Confusion& confusion) {
    check_square(confusion, "mca");
    const long long total = confusion_total(confusion);
    if (total == 0) throw ContractError("mca: empty test set");
    long long diag = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) diag += confusion[i][i];
    return static_cast<double>(diag) / static_cast<double>(total);
}

double mpca(const Confusion& confusion) {
    check_square(confusion, "mpca");
    double acc = 0.0;
    int classes = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        long long row_total = 0;
        for (long long v : confusion[i]) row_total += v;
        if (row_total == 0) {
            std::cerr << "mpca: class " << i << " absent from test set, skipped\n";
            continue;
        }
        acc += static_cast<double>(confusion[i][i]) / static_cast<double>(row_total);
        classes += 1;
    }
    if (classes == 0) throw ContractError("mpca: every class is empty");
    return acc / static_cast<double>(classes);
}

std::string history_csv(const std::vector<EpochRow>& history) {
    std::ostringstream os;
    os << "epoch,d_loss,g_loss,mca,mpca\n";
    char buf[160];
    for (const EpochRow& row : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", row.epoch, row.d_loss,
                      row.g_loss, row.mca, row.mpca);
        os << buf;
    }
    return os.str();
}

std::string render_report(const MetricsReport& report) {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "mca  %.4f\n", report.mca);
    os << buf;
    std::snprintf(buf, sizeof buf, "mpca %.4f\n", report.mpca);
    os << buf;
    os << "confusion (rows = true class):\n";
    for (const auto& row : report.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? " " : "  ") << row[j];
        os << "\n";
    }
    return os.str();
}

}  // namespace mlsgan
