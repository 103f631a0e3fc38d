import math

SUMMARY_HEADER = ("parameter,value,n_runs,status,feasible,eps_c,W_u_hz,"
                  "W_d_hz,eps_u,eps_d,D_c_max_s,cost_J,settled_fraction,"
                  "settle_time_mean_s,settle_time_ci95_s,overshoot_mean_m,"
                  "overshoot_max_m,jitter_rms_m,loss_rate,loss_attempts,"
                  "delta_final_abs_mean_m")

TRAJECTORY_HEADER = ("run_id,t_index,time_s,delta_m,v_mps,a_mps2,"
                     "delta_hat_m,command,eta,delay_steps,cum_cost")


def write_csv(path, header, rows):
    lines = [header] + rows
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(("\r\n".join(lines) + "\r\n").encode("utf-8"))
    return path


def trajectory_rows(n_runs=3, n_steps=8, bias=0.0):
    rows = []
    for run in range(n_runs):
        for t in range(n_steps):
            delta = 10.0 * math.exp(-0.3 * t) + 0.05 * run + bias
            eta = "" if t == 0 else "1"
            command = "" if t == 0 else repr(-0.5 * delta)
            rows.append(",".join([
                str(run), str(t), repr(0.05 * t), repr(delta), repr(-0.1),
                repr(0.02), repr(delta + 0.01), command, eta, "1",
                repr(1.5 * (t + 1)),
            ]))
    return rows


def summary_row(parameter="k_s", value="2", feasible=True, n_runs=3):
    if not feasible:
        return f"{parameter},{value},0,infeasible,false" + "," * 16
    return ",".join([
        parameter, value, str(n_runs), "converged", "true", repr(2e-06),
        repr(49050.5), repr(1450949.5), repr(1e-06), repr(1e-06),
        repr(0.0701), repr(55191.13), repr(1.0), repr(1.7455),
        repr(0.0222), repr(1.0099), repr(2.0204), repr(0.4781),
        repr(0.0), "480", repr(0.3186),
    ])
