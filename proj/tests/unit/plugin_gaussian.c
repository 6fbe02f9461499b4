int ttpdf_plugin_dimension(void) { return 2; }

void ttpdf_plugin_bounds(double* lower, double* upper) {
  for (int k = 0; k < 2; ++k) {
    lower[k] = -5.0;
    upper[k] = 5.0;
  }
}

double ttpdf_plugin_log_density(const double* x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); }
