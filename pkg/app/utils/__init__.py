# Utils package: validators, report formatting, file output
