"""
Constants for the ride-sourcing market simulator
"""

# Market calibration used by the shipped scenarios
RESERVATION_WAGE_EUR_PER_H = 12.0
COMMISSION_RATE = 0.20
FIXED_COST_EUR_PER_DAY = 500.0
TURNOVER_DAYS = 50
SHIFT_HOURS = 4.0
VEHICLE_SPEED_MPS = 10.0  # 36 km/h

# Regulation intensity relative to the reservation wage
REGULATION_LEVELS = {
    'weak': 0.8,       # 9.60 EUR/h
    'moderate': 1.0,   # 12.00 EUR/h
    'strong': 1.2,     # 14.40 EUR/h
}

# Perceived-utility weights (experience, word-of-mouth, marketing)
UTILITY_WEIGHTS = {
    'beta_e': 0.7,
    'beta_wom': 0.2,
    'beta_m': 0.1,
}

# Driver shift status
STATUS_IDLE = 'idle'
STATUS_ENROUTE = 'enroute_pickup'
STATUS_IN_RIDE = 'in_ride'

# Pricing game moves
MOVE_DOWN = 'down'
MOVE_STAY = 'stay'
MOVE_UP = 'up'

# Input file formats
NETWORK_NODE_COLUMNS = ['id', 'x_m', 'y_m']
NETWORK_EDGE_COLUMNS = ['from_id', 'to_id', 'length_m']
NETWORK_SPEED_KEY = 'speed_mps'
DEMAND_COLUMNS = ['traveler_id', 'origin_node', 'destination_node', 'request_time_s']

# Output file names
DAYS_FILE = 'days.csv'
SUMMARY_FILE = 'summary.csv'
DISTRIBUTIONS_FILE = 'distributions.csv'
FARES_FILE = 'fares.csv'
RIDES_FILE = 'rides.csv'
DRIVERS_FILE = 'drivers.csv'
SUMMARY_TEXT_FILE = 'summary.txt'
COMPARISON_FILE = 'comparison.csv'
RELATIVE_FILE = 'relative_to_baseline.csv'

# Float tolerance for money identities
MONEY_TOLERANCE_EUR = 1e-9
