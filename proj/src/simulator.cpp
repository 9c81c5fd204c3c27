#include "xdctrl/simulator.hpp"

namespace xdctrl
{

PlantSimulator::PlantSimulator(const SimPlant& plant, std::vector<double> gain_error)
    : plant_(plant), gain_(std::move(gain_error))
{
    if (gain_.empty())
        gain_.assign(plant_.arrays.size(), 0.0);
    if (gain_.size() != plant_.arrays.size())
        throw ShapeError("PlantSimulator: one gain error per actuator family is required");
    for (const auto& a : plant_.arrays)
    {
        if (a.R.cells() != plant_.n || a.R.block_rows() != plant_.n_y)
            throw ShapeError("PlantSimulator: family '" + a.name + "' does not match the ring");
        banks_.emplace_back(a.dyn, a.R.cols());
        ops_.emplace_back(a.R);
        corr_.push_back(VectorXd::Zero(plant_.N_y()));
    }
}

void PlantSimulator::output(const Eigen::Ref<const VectorXd>& d, Eigen::Ref<VectorXd> y)
{
    if (d.size() != plant_.N_y() || y.size() != plant_.N_y())
        throw ShapeError("PlantSimulator: disturbance length does not match N_y");
    y = d;
    for (std::size_t p = 0; p < banks_.size(); ++p)
    {
        ops_[p].apply(banks_[p].output(), corr_[p], ws_);
        if (gain_[p] != 0.0)
            corr_[p] *= 1.0 + gain_[p];
        y += corr_[p];
    }
}

void PlantSimulator::advance(const std::vector<VectorXd>& u)
{
    if (u.size() != banks_.size())
        throw ShapeError("PlantSimulator: one command vector per actuator family is required");
    for (std::size_t p = 0; p < banks_.size(); ++p)
    {
        if (u[p].size() != banks_[p].channels())
            throw ShapeError("PlantSimulator: command length does not match family '" + plant_.arrays[p].name + "'");
        banks_[p].advance(u[p]);
    }
}

void PlantSimulator::reset()
{
    for (auto& b : banks_)
        b.reset();
}

VectorXd step_plant(PlantSimulator& state, const std::vector<VectorXd>& u, const Eigen::Ref<const VectorXd>& d)
{
    VectorXd y(d.size());
    state.output(d, y);
    state.advance(u);
    return y;
}

const MatrixXd& SimulationTrace::u_of(const std::string& name) const
{
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name)
            return u[k];
    throw ShapeError("trace has no actuator family '" + name + "'");
}

SimulationTrace run_closed_loop(SimulationConfig cfg)
{
    if (cfg.steps < 1)
        throw DomainError("run_closed_loop: steps must be >= 1");
    auto& ctrl = cfg.controller;
    const SimPlant model_plant = ctrl.model();
    const SimPlant& truth_plant = cfg.plant ? *cfg.plant : model_plant;
    const Index Ny = model_plant.N_y();
    if (truth_plant.n != model_plant.n || truth_plant.n_y != model_plant.n_y ||
        truth_plant.arrays.size() != model_plant.arrays.size())
        throw ShapeError("run_closed_loop: plant and controller model differ in footprint");
    for (std::size_t p = 0; p < truth_plant.arrays.size(); ++p)
        if (truth_plant.arrays[p].R.cols() != model_plant.arrays[p].R.cols())
            throw ShapeError("run_closed_loop: plant and controller differ in actuator count");
    if (!cfg.disturbance || cfg.disturbance->rows() < cfg.steps || cfg.disturbance->cols() != Ny)
        throw ShapeError("run_closed_loop: disturbance must have at least steps rows and N_y columns");

    PlantSimulator truth(truth_plant, cfg.gain_error);
    PlantSimulator model(model_plant);
    ctrl.reset();

    const auto& rec = cfg.record;
    std::vector<Index> sensors = rec.sensors;
    if (sensors.empty())
        for (Index i = 0; i < Ny; ++i)
            sensors.push_back(i);
    for (Index s : sensors)
        if (s < 0 || s >= Ny)
            throw ShapeError("run_closed_loop: recorded sensor index out of range");

    SimulationTrace tr;
    const std::size_t np = model_plant.arrays.size();
    for (const auto& a : model_plant.arrays)
        tr.names.push_back(a.name);
    if (rec.y)
        tr.y.resize(cfg.steps, static_cast<Index>(sensors.size()));
    if (rec.u)
        for (const auto& a : model_plant.arrays)
            tr.u.emplace_back(cfg.steps, a.R.cols());
    if (rec.corrections)
        for (std::size_t p = 0; p < np; ++p)
            tr.corrections.emplace_back(cfg.steps, Ny);
    if (rec.y_model)
        tr.y_model.resize(cfg.steps, Ny);

    VectorXd y(Ny), ym(Ny), e(Ny), d(Ny);
    const VectorXd zero = VectorXd::Zero(Ny);
    std::vector<VectorXd> u;
    const MatrixXd& D = *cfg.disturbance;
    for (Index k = 0; k < cfg.steps; ++k)
    {
        d = D.row(k).transpose();
        truth.output(d, y);
        model.output(zero, ym);
        e = y - ym;
        ctrl.step(e, u);
        bool finite = y.allFinite();
        for (const auto& v : u)
            finite = finite && v.allFinite();
        if (!finite)
            throw DivergenceError("closed loop diverged at step " + std::to_string(k), k);
        if (rec.y)
            for (std::size_t s = 0; s < sensors.size(); ++s)
                tr.y(k, static_cast<Index>(s)) = y(sensors[s]);
        if (rec.u)
            for (std::size_t p = 0; p < np; ++p)
                tr.u[p].row(k) = u[p].transpose();
        if (rec.corrections)
            for (std::size_t p = 0; p < np; ++p)
                tr.corrections[p].row(k) = truth.correction(static_cast<Index>(p)).transpose();
        if (rec.y_model)
            tr.y_model.row(k) = ym.transpose();
        truth.advance(u);
        model.advance(u);
    }
    return tr;
}

MatrixXd run_modal_closed_loop(const Design& design, const ActuatorDynamics& dyn_s, const ActuatorDynamics& dyn_f,
                               const MatrixXd& disturbance, Index steps)
{
    const auto& ms = design.modal;
    const Index n = ms.n, ny = ms.n_y, ns = ms.n_s, nf = ms.n_f;
    if (disturbance.rows() < steps || disturbance.cols() != n * ny)
        throw ShapeError("run_modal_closed_loop: disturbance shape mismatch");

    using CBank = BasicActuatorBank<Complex>;
    std::vector<CBank> ws, wf, wms, wmf;
    std::vector<MatrixXcd> Xinv, Ms, Mf;
    for (Index i = 0; i < n; ++i)
    {
        const auto& c = ms.cells[static_cast<std::size_t>(i)];
        ws.emplace_back(dyn_s, ns);
        wf.emplace_back(dyn_f, nf);
        wms.emplace_back(dyn_s, ns);
        wmf.emplace_back(dyn_f, nf);
        Xinv.push_back(c.X.fullPivLu().inverse());
        // modal gains acting on the modal error: Xdag X
        Ms.push_back(design.gains.Xdag_s[static_cast<std::size_t>(i)] * c.X);
        Mf.push_back(nf > 0 ? MatrixXcd(design.gains.Xdag_f[static_cast<std::size_t>(i)] * c.X) : MatrixXcd(0, ny));
    }
    FilterBank Qs(design.filters.Q_s, n * ns);
    FilterBank Qf(design.filters.Q_f, n * nf);

    MatrixXd Y(steps, n * ny);
    VectorXcd vs(n * ns), vf(n * nf);
    MatrixXcd ytil(ny, n);
    for (Index k = 0; k < steps; ++k)
    {
        const VectorXcd dk = disturbance.row(k).transpose().cast<Complex>();
        const MatrixXcd dhat = cell_transform(dk, n);
        for (Index i = 0; i < n; ++i)
        {
            const auto& c = ms.cells[static_cast<std::size_t>(i)];
            const auto ii = static_cast<std::size_t>(i);
            const VectorXcd dtil = Xinv[ii] * dhat.col(i);
            VectorXcd yt = c.S_s * ws[ii].output() + dtil;
            VectorXcd ym = c.S_s * wms[ii].output();
            if (nf > 0)
            {
                yt += c.S_f * wf[ii].output();
                ym += c.S_f * wmf[ii].output();
            }
            ytil.col(i) = c.X * yt;
            const VectorXcd et = yt - ym;
            vs.segment(i * ns, ns) = Ms[ii] * et;
            if (nf > 0)
                vf.segment(i * nf, nf) = Mf[ii] * et;
        }
        Y.row(k) = inverse_cell_transform(ytil).real().transpose();
        Qs.step(vs, vs);
        if (nf > 0)
            Qf.step(vf, vf);
        for (Index i = 0; i < n; ++i)
        {
            const auto ii = static_cast<std::size_t>(i);
            const VectorXcd us = -vs.segment(i * ns, ns);
            ws[ii].advance(us);
            wms[ii].advance(us);
            if (nf > 0)
            {
                const VectorXcd uf = -vf.segment(i * nf, nf);
                wf[ii].advance(uf);
                wmf[ii].advance(uf);
            }
        }
    }
    return Y;
}

} // namespace xdctrl
