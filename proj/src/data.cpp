#include "rsgnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rsgnet {

Sample Dataset::sample(int row) const {
    Sample s;
    s.x = inputs.row(row).transpose();
    if (targets) s.y = targets->row(row).transpose();
    return s;
}

void Dataset::validate() const {
    if (inputs.rows() < 1) throw std::invalid_argument("dataset is empty");
    if ((inputs.array() < 0.0).any() || (inputs.array() > 1.0).any())
        throw std::invalid_argument("dataset inputs must lie in [0,1]");
    if (targets) {
        if (targets->rows() != inputs.rows())
            throw std::invalid_argument("inputs and targets row counts differ");
        if ((targets->array() < 0.0).any() || (targets->array() > 1.0).any())
            throw std::invalid_argument("dataset targets must lie in [0,1]");
    }
}

namespace {

bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

Matrix normalize_inputs(Matrix m, Normalization rule) {
    switch (rule) {
        case Normalization::Scale255:
            m /= 255.0;
            break;
        case Normalization::MinMax:
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double lo = m.col(c).minCoeff();
                const double hi = m.col(c).maxCoeff();
                if (hi > lo)
                    m.col(c) = (m.col(c).array() - lo) / (hi - lo);
                else
                    m.col(c).setZero();
            }
            break;
        case Normalization::None:
            break;
    }
    if ((m.array() < 0.0).any() || (m.array() > 1.0).any())
        throw std::invalid_argument("inputs fall outside [0,1] after normalization");
    return m;
}

/// Labels that are all small nonnegative integers get one-hot rows.
Matrix encode_targets(const std::vector<double>& labels) {
    bool categorical = true;
    double max_label = 0.0;
    for (double v : labels) {
        if (v < 0.0 || v != std::floor(v) || v > 4096.0) {
            categorical = false;
            break;
        }
        max_label = std::max(max_label, v);
    }
    const int n = static_cast<int>(labels.size());
    if (categorical) {
        const int k = static_cast<int>(max_label) + 1;
        Matrix t = Matrix::Zero(n, k);
        for (int i = 0; i < n; ++i) t(i, static_cast<int>(labels[i])) = 1.0;
        return t;
    }
    Matrix t(n, 1);
    for (int i = 0; i < n; ++i) t(i, 0) = labels[i];
    return t;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size())
        throw std::runtime_error("idx file truncated at byte " + std::to_string(offset));
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset load_csv(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t byte_offset = 0;
    std::size_t width = 0;
    bool first_data_line = true;

    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t line_start = byte_offset;
        byte_offset += line.size() + 1;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const auto cells = split_csv_line(line);
        std::vector<double> values(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (!parse_double(cells[i], values[i])) {
                numeric = false;
                break;
            }
        if (!numeric) {
            if (first_data_line) continue;  // optional header line
            throw std::runtime_error("csv parse error at byte " + std::to_string(line_start) +
                                     " (line " + std::to_string(line_no) + ")");
        }
        first_data_line = false;
        if (width == 0) width = values.size();
        if (values.size() != width)
            throw std::runtime_error("csv row width mismatch at byte " +
                                     std::to_string(line_start) + " (line " +
                                     std::to_string(line_no) + ")");
        if (opts.label_column >= 0) {
            if (static_cast<std::size_t>(opts.label_column) >= values.size())
                throw std::invalid_argument("label column out of range");
            labels.push_back(values[opts.label_column]);
            values.erase(values.begin() + opts.label_column);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw std::runtime_error("csv file has no data rows: " + path);

    Matrix inputs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

    Dataset data;
    data.inputs = normalize_inputs(std::move(inputs), opts.normalization);
    if (!labels.empty()) data.targets = encode_targets(labels);
    data.provenance = "csv:" + path;
    data.validate();
    return data;
}

Dataset load_idx(const std::string& image_path, const LoadOptions& opts) {
    const auto bytes = read_file_bytes(image_path);
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != 2051)
        throw std::runtime_error("bad idx image magic " + std::to_string(magic) + " at byte 0");
    const std::uint32_t count = read_be32(bytes, 4);
    const std::uint32_t rows = read_be32(bytes, 8);
    const std::uint32_t cols = read_be32(bytes, 12);
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const std::size_t need = 16 + static_cast<std::size_t>(count) * pixels;
    if (bytes.size() < need)
        throw std::runtime_error("idx image payload truncated at byte " +
                                 std::to_string(bytes.size()) + ", expected " +
                                 std::to_string(need));

    Matrix inputs(count, pixels);
    for (std::uint32_t i = 0; i < count; ++i)
        for (std::size_t p = 0; p < pixels; ++p)
            inputs(i, static_cast<Eigen::Index>(p)) =
                static_cast<double>(bytes[16 + static_cast<std::size_t>(i) * pixels + p]);

    Dataset data;
    data.inputs = normalize_inputs(std::move(inputs), opts.normalization);
    data.provenance = "idx:" + image_path;

    if (!opts.labels_path.empty()) {
        const auto lbytes = read_file_bytes(opts.labels_path);
        const std::uint32_t lmagic = read_be32(lbytes, 0);
        if (lmagic != 2049)
            throw std::runtime_error("bad idx label magic " + std::to_string(lmagic) +
                                     " at byte 0");
        const std::uint32_t lcount = read_be32(lbytes, 4);
        if (lcount != count)
            throw std::runtime_error("idx label count " + std::to_string(lcount) +
                                     " does not match image count " + std::to_string(count));
        if (lbytes.size() < 8 + lcount)
            throw std::runtime_error("idx label payload truncated at byte " +
                                     std::to_string(lbytes.size()));
        std::vector<double> labels(lcount);
        for (std::uint32_t i = 0; i < lcount; ++i) labels[i] = static_cast<double>(lbytes[8 + i]);
        data.targets = encode_targets(labels);
    }
    data.validate();
    return data;
}

Dataset load_dataset(const std::string& path, FileFormat format, const LoadOptions& opts) {
    return format == FileFormat::Csv ? load_csv(path, opts) : load_idx(path, opts);
}

MomentReport estimate_moments(const Dataset& data) {
    if (data.size() < 1) throw std::invalid_argument("dataset is empty");
    MomentReport report;
    report.per_dim_means = data.inputs.colwise().mean().transpose();
    report.moments.mu_x = report.per_dim_means.mean();
    report.moments.tau_x = report.per_dim_means.array().square().mean();
    return report;
}

namespace {

double beta_draw(double mean, double concentration, Rng& rng) {
    if (mean <= 0.0) return 0.0;
    if (mean >= 1.0) return 1.0;
    std::gamma_distribution<double> ga(concentration * mean, 1.0);
    std::gamma_distribution<double> gb(concentration * (1.0 - mean), 1.0);
    const double a = ga(rng);
    const double b = gb(rng);
    const double sum = a + b;
    return sum > 0.0 ? a / sum : mean;
}

/// Per-dimension means hitting (mu, tau) exactly when the symmetric two-point
/// spread fits in [0,1]; otherwise one endpoint is pinned at 0 or 1 and the
/// mean stays exact while tau is matched as closely as integer counts allow.
std::vector<double> build_dim_means(int d, double mu, double tau) {
    const double var = std::max(0.0, tau - mu * mu);
    std::vector<double> means(d, mu);
    if (var < 1e-15 || d == 1) return means;

    const int pairs = d / 2;
    const double spread = std::sqrt(var * d / (2.0 * pairs));  // = sqrt(var) for even d
    if (mu + spread <= 1.0 && mu - spread >= 0.0) {
        for (int i = 0; i < pairs; ++i) {
            means[2 * i] = mu + spread;
            means[2 * i + 1] = mu - spread;
        }
        return means;
    }

    if (mu + spread > 1.0) {
        const double p = (tau - mu * mu) / (1.0 + tau - 2.0 * mu);
        int n1 = static_cast<int>(std::lround(p * d));
        n1 = std::clamp(n1, 0, d - 1);
        const double a = std::clamp((d * mu - n1) / (d - n1), 0.0, 1.0);
        for (int i = 0; i < d; ++i) means[i] = i < n1 ? 1.0 : a;
        return means;
    }

    const double a = tau / mu;
    int n0 = static_cast<int>(std::lround(d * (1.0 - mu * mu / tau)));
    n0 = std::clamp(n0, 0, d - 1);
    const double b = std::clamp(d * mu / (d - n0), 0.0, 1.0);
    for (int i = 0; i < d; ++i) means[i] = i < n0 ? 0.0 : b;
    (void)a;
    return means;
}

}  // namespace

Dataset synthesize_dataset(int d_x, int d_y, int samples, const DataMoments& target, Rng& rng) {
    if (d_x < 1 || d_y < 0 || samples < 1)
        throw std::invalid_argument("synthesize_dataset needs d_x >= 1, d_y >= 0, samples >= 1");
    const double mu = target.mu_x;
    const double tau = target.tau_x;
    if (mu < 0.0 || mu > 1.0 || tau < 0.0 || tau > 1.0)
        throw std::invalid_argument("target moments must lie in [0,1]");
    if (tau > mu + 1e-12)
        throw std::invalid_argument("infeasible target: tau_x must not exceed mu_x");
    if (tau < mu * mu - 1e-12)
        throw std::invalid_argument("infeasible target: tau_x must be at least mu_x^2");

    const auto means = build_dim_means(d_x, mu, tau);
    constexpr double kConcentration = 30.0;

    Dataset data;
    data.inputs.resize(samples, d_x);
    for (int j = 0; j < d_x; ++j)
        for (int i = 0; i < samples; ++i)
            data.inputs(i, j) = beta_draw(means[j], kConcentration, rng);

    if (d_y > 0) {
        const double scale = 2.0 / std::sqrt(static_cast<double>(d_x));
        Matrix teacher(d_y, d_x);
        for (int r = 0; r < d_y; ++r)
            for (int c = 0; c < d_x; ++c) teacher(r, c) = uniform_range(rng, -scale, scale);
        data.targets = Matrix(samples, d_y);
        for (int i = 0; i < samples; ++i)
            data.targets->row(i) =
                sigmoid(Vector(teacher * data.inputs.row(i).transpose())).transpose();
    }
    std::ostringstream prov;
    prov << "synthetic(mu=" << mu << ",tau=" << tau << ",S=" << samples << ")";
    data.provenance = prov.str();
    data.validate();
    return data;
}

std::vector<int> sample_indices(int count, int batch, Rng& rng) {
    if (count < 1) throw std::invalid_argument("cannot sample from an empty dataset");
    if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
    std::vector<int> idx(batch);
    for (int i = 0; i < batch; ++i) idx[i] = uniform_index(rng, count);
    return idx;
}

Dataset minibatch(const Dataset& data, int batch, Rng& rng) {
    const auto idx = sample_indices(data.size(), batch, rng);
    Dataset out;
    out.inputs.resize(batch, data.input_dim());
    if (data.targets) out.targets = Matrix(batch, data.target_dim());
    for (int i = 0; i < batch; ++i) {
        out.inputs.row(i) = data.inputs.row(idx[i]);
        if (data.targets) out.targets->row(i) = data.targets->row(idx[i]);
    }
    out.provenance = data.provenance + ":batch";
    return out;
}

Dataset augment_with_bias(const Dataset& data) {
    Dataset out = data;
    out.inputs.conservativeResize(Eigen::NoChange, data.inputs.cols() + 1);
    out.inputs.col(data.inputs.cols()).setOnes();
    out.provenance = data.provenance + ":bias";
    return out;
}

}  // namespace rsgnet
