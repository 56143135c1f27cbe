#include "bcstab/point_io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bcstab {

namespace {

void write_values(std::ostream& os, const Vector& v)
{
    char buf[40];
    for (int i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v[i]);
        os << buf;
    }
}

std::string expect_field(std::istringstream& hs, const std::string& name)
{
    std::string tok;
    if (!(hs >> tok) || tok.rfind(name + "=", 0) != 0) {
        throw PointFormatError("point header: expected field '" + name + "='");
    }
    return tok.substr(name.size() + 1);
}

long parse_count(const std::string& s, const std::string& name)
{
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size() || v < 0) throw std::invalid_argument(name);
        return v;
    }
    catch (const std::exception&) {
        throw PointFormatError("point header: bad value for " + name + ": '" + s + "'");
    }
}

}  // namespace

void write_point(std::ostream& os, const DiscreteProblem& dp, const KktPoint& p)
{
    p.validate(dp.m());
    os << "kktpoint v1 mesh=" << dp.mesh().hash_hex() << " vertices=" << dp.num_vertices()
       << " boundary=" << dp.num_boundary() << " m=" << dp.m() << "\n";
    write_values(os, p.y.values());
    write_values(os, p.u.values());
    write_values(os, p.theta.values());
    for (const auto& ei : p.e) write_values(os, ei.values());
}

KktPoint read_point(std::istream& is, const DiscreteProblem& dp, const Vector& lambda)
{
    std::string header;
    if (!std::getline(is, header)) throw PointFormatError("point file is empty");
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "kktpoint" || version != "v1") throw PointFormatError("not a kktpoint v1 file");
    const std::string hash = expect_field(hs, "mesh");
    const long nv = parse_count(expect_field(hs, "vertices"), "vertices");
    const long nb = parse_count(expect_field(hs, "boundary"), "boundary");
    const long m = parse_count(expect_field(hs, "m"), "m");
    if (hash != dp.mesh().hash_hex() || nv != dp.num_vertices() || nb != dp.num_boundary()) {
        throw PointFormatError("point file was written for a different mesh (mesh=" + hash + ", vertices=" +
                               std::to_string(nv) + ", boundary=" + std::to_string(nb) + ")");
    }
    if (m != dp.m()) {
        throw PointFormatError("point file has m=" + std::to_string(m) + " multipliers, instance has " +
                               std::to_string(dp.m()));
    }
    if (lambda.size() != nb) throw PointFormatError("parameter size does not match the mesh");

    long line_no = 1;
    auto read_block = [&](long count, const char* field) {
        Vector v(count);
        std::string line;
        for (long i = 0; i < count; ++i) {
            ++line_no;
            if (!std::getline(is, line)) {
                throw PointFormatError(std::string("point file ends inside field ") + field + " (line " +
                                       std::to_string(line_no) + ")");
            }
            std::istringstream ls(line);
            double x = 0.0;
            char extra = 0;
            if (!(ls >> x) || (ls >> extra) || !std::isfinite(x)) {
                throw PointFormatError("bad value on line " + std::to_string(line_no) + ": '" + line + "'");
            }
            v[i] = x;
        }
        return v;
    };

    Vector y = read_block(nv, "y");
    Vector u = read_block(nb, "u");
    Vector theta = read_block(nv, "theta");
    std::vector<BoundaryFunction> e;
    for (long i = 0; i < m; ++i) e.emplace_back(dp.mesh_ptr(), read_block(nb, "e"));
    std::string rest;
    while (std::getline(is, rest)) {
        if (rest.find_first_not_of(" \t\r") != std::string::npos) {
            throw PointFormatError("point file has trailing data after the last field");
        }
    }
    return {FeFunction(dp.mesh_ptr(), std::move(y)), BoundaryFunction(dp.mesh_ptr(), std::move(u)),
            FeFunction(dp.mesh_ptr(), std::move(theta)), std::move(e), BoundaryFunction(dp.mesh_ptr(), lambda)};
}

}  // namespace bcstab
