#include "xdctrl/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace xdctrl::io
{

namespace
{

static_assert(sizeof(double) == 8);

template <typename T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <typename T>
void put(std::ostream& os, T v)
{
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw ConfigError(path.string() + ": truncated binary matrix file");
    return to_little(v);
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view tok, const std::filesystem::path& path, std::size_t line)
{
    tok = trim(tok);
    T v{};
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(tok) + "'");
    return v;
}

} // namespace

MatrixXd read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(path.string() + ": empty file");
    const auto header = split(line, ',');
    if (header.size() != 2)
        throw ConfigError(path.string() + ":1: header must be 'rows,cols'");
    const auto rows = parse_number<long>(header[0], path, 1);
    const auto cols = parse_number<long>(header[1], path, 1);
    if (rows < 0 || cols < 0)
        throw ConfigError(path.string() + ":1: negative dimensions");
    MatrixXd M(rows, cols);
    for (long r = 0; r < rows; ++r)
    {
        const std::size_t lineno = static_cast<std::size_t>(r) + 2;
        if (!std::getline(in, line))
            throw ConfigError(path.string() + ": expected " + std::to_string(rows) + " rows, found " +
                              std::to_string(r));
        const auto toks = split(line, ',');
        if (static_cast<long>(toks.size()) != cols)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                              " values");
        for (long c = 0; c < cols; ++c)
            M(r, c) = parse_number<double>(toks[static_cast<std::size_t>(c)], path, lineno);
    }
    return M;
}

void write_csv(const std::filesystem::path& path, const MatrixXd& M)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << M.rows() << ',' << M.cols() << '\n';
    char buf[32];
    for (Index r = 0; r < M.rows(); ++r)
    {
        for (Index c = 0; c < M.cols(); ++c)
        {
            const auto res = std::to_chars(buf, buf + sizeof(buf), M(r, c));
            if (c)
                out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

namespace
{

std::vector<MatrixXd> read_blocks(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "BCM1", 4) != 0)
        throw ConfigError(path.string() + ": bad magic, expected BCM1");
    const auto n = get<std::uint32_t>(in, path);
    const auto p = get<std::uint32_t>(in, path);
    const auto m = get<std::uint32_t>(in, path);
    if (n == 0)
        throw ConfigError(path.string() + ": zero cells");
    std::vector<MatrixXd> blocks;
    blocks.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k)
    {
        MatrixXd b(p, m);
        for (std::uint32_t r = 0; r < p; ++r)
            for (std::uint32_t c = 0; c < m; ++c)
                b(r, c) = get<double>(in, path);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

} // namespace

BlockCirculantMatrixd read_bcm(const std::filesystem::path& path)
{
    auto blocks = read_blocks(path);
    if (blocks.front().rows() == 0)
        throw ConfigError(path.string() + ": zero-row blocks");
    return BlockCirculantMatrixd(std::move(blocks));
}

void write_bcm(const std::filesystem::path& path, const BlockCirculantMatrixd& B)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out.write("BCM1", 4);
    put(out, static_cast<std::uint32_t>(B.cells()));
    put(out, static_cast<std::uint32_t>(B.block_rows()));
    put(out, static_cast<std::uint32_t>(B.block_cols()));
    for (const auto& b : B.blocks())
        for (Index r = 0; r < b.rows(); ++r)
            for (Index c = 0; c < b.cols(); ++c)
                put(out, b(r, c));
}

MatrixXd read_dense_bcm(const std::filesystem::path& path)
{
    auto blocks = read_blocks(path);
    if (blocks.size() == 1)
        return std::move(blocks.front());
    return BlockCirculantMatrixd(std::move(blocks)).dense();
}

void write_dense_bcm(const std::filesystem::path& path, const MatrixXd& M)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out.write("BCM1", 4);
    put(out, std::uint32_t{1});
    put(out, static_cast<std::uint32_t>(M.rows()));
    put(out, static_cast<std::uint32_t>(M.cols()));
    for (Index r = 0; r < M.rows(); ++r)
        for (Index c = 0; c < M.cols(); ++c)
            put(out, M(r, c));
}

void write_complex_bcm(const std::filesystem::path& stem, const MatrixXcd& M)
{
    write_dense_bcm(stem.string() + "_re.bcm", M.real());
    write_dense_bcm(stem.string() + "_im.bcm", M.imag());
}

MatrixXcd read_complex_bcm(const std::filesystem::path& stem)
{
    const MatrixXd re = read_dense_bcm(stem.string() + "_re.bcm");
    const MatrixXd im = read_dense_bcm(stem.string() + "_im.bcm");
    if (re.rows() != im.rows() || re.cols() != im.cols())
        throw ConfigError(stem.string() + ": real and imaginary parts differ in shape");
    MatrixXcd M(re.rows(), re.cols());
    M.real() = re;
    M.imag() = im;
    return M;
}

BlockCirculantMatrixd load_block_circulant(const std::filesystem::path& path, Index n, double rel_tol)
{
    if (path.extension() == ".csv")
        return BlockCirculantMatrixd::from_dense(read_csv(path), n, rel_tol);
    auto B = read_bcm(path);
    if (B.cells() != n)
        throw ConfigError(path.string() + ": file has " + std::to_string(B.cells()) + " cells, expected " +
                          std::to_string(n));
    return B;
}

MatrixXd load_dense(const std::filesystem::path& path)
{
    if (path.extension() == ".csv")
        return read_csv(path);
    return read_dense_bcm(path);
}

} // namespace xdctrl::io
